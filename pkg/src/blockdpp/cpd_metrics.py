"""Dissimilarity metrics between time-series segments and the sliding
adjacent-window dissimilarity profile.

A time series is a (T, D) float array; an event sequence is a strictly
increasing 1-D array of event times.  All likelihood-ratio metrics return
logs: the ratio form overflows and the log is order-preserving for
peak-picking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matrix_core as mc
from .errors import SingularToTolerance

DEFAULT_DELTA_REG = 1e-6

METRICS = ("symkl", "glr_gaussian", "glr_poisson")


def as_series(X) -> np.ndarray:
    """Coerce to a (T, D) float array; 1-D input becomes a single column."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected (T, D) observations, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("series contains non-finite values")
    return A


def as_events(E) -> np.ndarray:
    e = np.asarray(E, dtype=np.float64).ravel()
    if e.size >= 2 and np.any(np.diff(e) <= 0):
        raise ValueError("event times must be strictly increasing")
    return e


@dataclass
class SegmentStats:
    count: int
    mean: np.ndarray
    cov: np.ndarray  # ML covariance (denominator = count) plus delta_reg * I


def segment_stats(X, start: int, stop: int,
                  delta_reg: float = DEFAULT_DELTA_REG) -> SegmentStats:
    """Sample mean and ML covariance of X[start:stop], ridge-regularized."""
    A = as_series(X)
    seg = A[start:stop]
    M = seg.shape[0]
    if M < 2:
        raise ValueError("segment must contain at least 2 samples")
    mu = seg.mean(axis=0)
    Z = seg - mu
    cov = (Z.T @ Z) / M + delta_reg * np.eye(seg.shape[1])
    return SegmentStats(count=M, mean=mu, cov=0.5 * (cov + cov.T))


def symkl(s1: SegmentStats, s2: SegmentStats) -> float:
    """Symmetrized KL divergence between two Gaussian segment models."""
    D = s1.mean.size
    inv1 = mc.inverse_spd(s1.cov)
    inv2 = mc.inverse_spd(s2.cov)
    dm = s1.mean - s2.mean
    val = (np.trace(s1.cov @ inv2) + np.trace(s2.cov @ inv1) - 2.0 * D
           + dm @ (inv1 + inv2) @ dm)
    return float(val)


def _gauss_loglik(seg: np.ndarray, stats: SegmentStats) -> float:
    M, D = seg.shape
    Z = seg - stats.mean
    inv = mc.inverse_spd(stats.cov)
    quad = float(np.sum((Z @ inv) * Z))
    return -0.5 * (M * (D * np.log(2.0 * np.pi) + mc.log_det(stats.cov)) + quad)


def glr_gaussian(X1, X2, delta_reg: float = DEFAULT_DELTA_REG) -> float:
    """Log likelihood ratio: separate Gaussian fits vs one pooled fit."""
    A1, A2 = as_series(X1), as_series(X2)
    if A1.shape[1] != A2.shape[1]:
        raise ValueError("segments must have the same dimension")
    pooled = np.vstack([A1, A2])
    s1 = segment_stats(A1, 0, A1.shape[0], delta_reg)
    s2 = segment_stats(A2, 0, A2.shape[0], delta_reg)
    sp = segment_stats(pooled, 0, pooled.shape[0], delta_reg)
    return (_gauss_loglik(A1, s1) + _gauss_loglik(A2, s2)
            - _gauss_loglik(pooled, sp))


def _poisson_loglik(e: np.ndarray) -> float:
    M = e.size
    span = e[-1] - e[0]
    if M < 2:
        raise ValueError("event sequence must contain at least 2 events")
    if span <= 0:
        raise ValueError("event span must be positive")
    lam = (M - 1) / span
    return (M - 1) * np.log(lam) - span * lam


def glr_poisson(E1, E2) -> float:
    """Log likelihood ratio for homogeneous Poisson rates, MLE plug-ins.

    The pooled model is fit on the concatenation of both event lists, with
    span taken over the union.
    """
    e1, e2 = as_events(E1), as_events(E2)
    pooled = np.sort(np.concatenate([e1, e2]))
    return float(_poisson_loglik(e1) + _poisson_loglik(e2)
                 - _poisson_loglik(pooled))


@dataclass
class DissimilarityProfile:
    """d values over candidate split times t in [w, T - w]."""

    window: int
    times: np.ndarray   # candidate split positions
    values: np.ndarray

    def __post_init__(self):
        if self.times.size != self.values.size:
            raise ValueError("times and values length mismatch")


def dissimilarity_profile(X, window: int, metric: str = "symkl",
                          delta_reg: float = DEFAULT_DELTA_REG) -> DissimilarityProfile:
    """Adjacent-window dissimilarity d(x[t-w:t], x[t:t+w]) for t in [w, T-w]."""
    A = as_series(X)
    T = A.shape[0]
    w = int(window)
    if w < 2:
        raise ValueError("window must be at least 2")
    if T < 2 * w:
        raise ValueError(f"series of length {T} too short for window {w}")
    if metric not in ("symkl", "glr_gaussian"):
        raise ValueError(f"unknown series metric {metric!r}")
    ts = np.arange(w, T - w + 1)
    vals = np.empty(ts.size)
    for k, t in enumerate(ts):
        left, right = A[t - w:t], A[t:t + w]
        if metric == "symkl":
            vals[k] = symkl(segment_stats(left, 0, w, delta_reg),
                            segment_stats(right, 0, w, delta_reg))
        else:
            vals[k] = glr_gaussian(left, right, delta_reg)
    return DissimilarityProfile(window=w, times=ts, values=vals)


def poisson_profile(E, window: float, step: float = 1.0) -> DissimilarityProfile:
    """GLR profile over an event sequence using time windows of width `window`.

    Evaluated on a uniform grid between the first and last event; windows
    holding fewer than 2 events contribute 0 (no evidence).
    """
    e = as_events(E)
    if e.size < 2:
        raise ValueError("need at least 2 events")
    if window <= 0 or step <= 0:
        raise ValueError("window and step must be positive")
    lo, hi = e[0] + window, e[-1] - window
    if hi < lo:
        raise ValueError("event span too short for the window")
    ts = np.arange(lo, hi + step * 0.5, step)
    vals = np.zeros(ts.size)
    for k, t in enumerate(ts):
        left = e[(e >= t - window) & (e < t)]
        right = e[(e >= t) & (e < t + window)]
        if left.size >= 2 and right.size >= 2:
            vals[k] = glr_poisson(left, right)
    return DissimilarityProfile(window=int(np.ceil(window)), times=ts, values=vals)
