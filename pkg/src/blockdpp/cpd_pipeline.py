"""Two-step change-point detection.

Step 1 turns a dissimilarity profile into candidate change-points (local
peaks above the profile mean).  Step 2 treats the candidates as DPP items,
builds a quality/position-diversity kernel over them, and selects the final
change-points by block-wise MAP inference.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import cpd_metrics as metrics
from . import kernel_model as km
from . import map_inference as mi

EPS_QUALITY = 1e-9


@dataclass(frozen=True)
class DetectionConfig:
    window: int = 50
    sigma: float = 200.0
    gamma: int = 0
    metric: str = "symkl"
    eps_zero: float = km.DEFAULT_EPS_ZERO
    delta_reg: float = metrics.DEFAULT_DELTA_REG
    quality_gain: float = 1.5     # alpha in q -> (alpha * q / mean(q)) ** beta
    quality_exponent: float = 1.0  # beta
    require_initial_gain: bool = False
    event_step: float = 1.0       # profile grid step for event sequences

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be at least 2")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.metric not in metrics.METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")


@dataclass
class CandidateSet:
    times: np.ndarray     # strictly increasing candidate positions
    scores: np.ndarray    # profile values at those positions
    profile: metrics.DissimilarityProfile


@dataclass
class DetectionReport:
    config: DetectionConfig
    candidates: CandidateSet
    qualities: np.ndarray
    selected: np.ndarray          # subset of candidate times
    degenerate_candidates: List[int]
    timings_ms: dict

    def to_json_dict(self, include_timings: bool = True) -> dict:
        d = {
            "config": asdict(self.config),
            "candidates": [
                {"t": float(t), "d": float(s), "q": float(q)}
                for t, s, q in zip(self.candidates.times,
                                   self.candidates.scores, self.qualities)
            ],
            "selected": [float(t) for t in self.selected],
        }
        if include_timings:
            d["timings_ms"] = self.timings_ms
        return d


def pick_candidates(profile: metrics.DissimilarityProfile) -> CandidateSet:
    """Interior local peaks strictly above the profile mean.

    A plateau counts once, at its leftmost index; boundary positions are
    excluded.
    """
    v = profile.values
    if v.size == 0:
        raise ValueError("empty profile")
    mean = float(np.mean(v))
    keep = []
    for k in range(1, v.size - 1):
        if v[k - 1] < v[k] >= v[k + 1] and v[k] > mean:
            keep.append(k)
    idx = np.asarray(keep, dtype=np.int64)
    return CandidateSet(times=profile.times[idx], scores=v[idx], profile=profile)


def _segment_metric(X, a: int, b: int, c: int, cfg: DetectionConfig,
                    flags: List[int], cand_index: int) -> float:
    # d(x[a:b], x[b:c]) with fallback to minimal valid windows when a side
    # is degenerate (< 2 samples).
    lo, hi = a, c
    if b - a < 2:
        lo = max(0, b - 2)
        flags.append(cand_index)
    if c - b < 2:
        hi = min(X.shape[0], b + 2)
        if cand_index not in flags:
            flags.append(cand_index)
    left, right = X[lo:b], X[b:hi]
    if cfg.metric == "symkl":
        return metrics.symkl(
            metrics.segment_stats(left, 0, left.shape[0], cfg.delta_reg),
            metrics.segment_stats(right, 0, right.shape[0], cfg.delta_reg))
    return metrics.glr_gaussian(left, right, cfg.delta_reg)


def candidate_quality(X, cand: CandidateSet, cfg: DetectionConfig):
    """Per-candidate quality from the metric on the flanking segments.

    Segment boundaries are the neighbouring candidates, with the series ends
    as sentinels.  Raw values are rescaled by the configured transform
    q -> (gain * q / mean(q)) ** exponent and floored at a tiny positive
    value so the kernel stays well-defined.
    """
    A = metrics.as_series(X)
    ts = cand.times.astype(np.int64)
    n = ts.size
    flags: List[int] = []
    if n == 0:
        return np.empty(0), flags
    bounds = np.concatenate([[0], ts, [A.shape[0]]])
    raw = np.empty(n)
    for i in range(n):
        raw[i] = _segment_metric(A, int(bounds[i]), int(bounds[i + 1]),
                                 int(bounds[i + 2]), cfg, flags, i)
    raw = np.maximum(raw, EPS_QUALITY)
    q = (cfg.quality_gain * raw / np.mean(raw)) ** cfg.quality_exponent
    return np.maximum(q, EPS_QUALITY), flags


def _event_quality(E: np.ndarray, cand_times: np.ndarray,
                   cfg: DetectionConfig):
    flags: List[int] = []
    n = cand_times.size
    if n == 0:
        return np.empty(0), flags
    bounds = np.concatenate([[E[0]], cand_times, [E[-1] + cfg.event_step]])
    raw = np.full(n, EPS_QUALITY)
    for i in range(n):
        b = bounds[i + 1]
        left = E[(E >= bounds[i]) & (E < b)]
        right = E[(E >= b) & (E < bounds[i + 2])]
        if left.size < 2:
            left = E[E < b][-2:]  # minimal enclosing window
            flags.append(i)
        if right.size < 2:
            right = E[E >= b][:2]
            if i not in flags:
                flags.append(i)
        if left.size >= 2 and right.size >= 2:
            raw[i] = max(metrics.glr_poisson(left, right), EPS_QUALITY)
    q = (cfg.quality_gain * raw / np.mean(raw)) ** cfg.quality_exponent
    return np.maximum(q, EPS_QUALITY), flags


def build_cpd_kernel(cand_times, q, sigma: float, gamma: int = 0,
                     eps_zero: float = km.DEFAULT_EPS_ZERO):
    """Quality/position-diversity kernel over candidates plus its partition."""
    cand_times = np.asarray(cand_times, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if cand_times.size != q.size or cand_times.size == 0:
        raise ValueError("need matching, nonempty candidates and qualities")
    S = km.gaussian_position_similarity(cand_times, sigma, eps_zero)
    kern = km.build_quality_diversity_kernel(q, S)
    part = km.gamma_partition(kern.L, gamma, eps_zero)
    return kern, part


PostFilter = Callable[[np.ndarray, "DetectionReport"], np.ndarray]


def detect_change_points(X, cfg: DetectionConfig = DetectionConfig(),
                         post_filter: Optional[PostFilter] = None) -> DetectionReport:
    """Full pipeline on a (T, D) series: profile, candidates, kernel, selection."""
    A = metrics.as_series(X)
    timings = {}
    t0 = time.perf_counter()
    prof = metrics.dissimilarity_profile(A, cfg.window, cfg.metric, cfg.delta_reg)
    timings["profile"] = (time.perf_counter() - t0) * 1e3
    return _select_from_profile(prof, cfg, timings,
                                lambda cand: candidate_quality(A, cand, cfg),
                                post_filter)


def detect_change_points_events(E, cfg: DetectionConfig) -> DetectionReport:
    """Pipeline variant for event sequences with the Poisson GLR metric."""
    e = metrics.as_events(E)
    timings = {}
    t0 = time.perf_counter()
    prof = metrics.poisson_profile(e, cfg.window, cfg.event_step)
    timings["profile"] = (time.perf_counter() - t0) * 1e3
    return _select_from_profile(prof, cfg, timings,
                                lambda cand: _event_quality(e, cand.times, cfg),
                                None)


def _select_from_profile(prof, cfg, timings, quality_fn, post_filter):
    t0 = time.perf_counter()
    cand = pick_candidates(prof)
    timings["candidates"] = (time.perf_counter() - t0) * 1e3

    if cand.times.size == 0:
        return DetectionReport(config=cfg, candidates=cand,
                               qualities=np.empty(0),
                               selected=np.empty(0),
                               degenerate_candidates=[], timings_ms=timings)

    t0 = time.perf_counter()
    q, flags = quality_fn(cand)
    timings["quality"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    kern, part = build_cpd_kernel(cand.times, q, cfg.sigma, cfg.gamma,
                                  cfg.eps_zero)
    timings["kernel"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    solver = lambda K: mi.greedy_map(K, cfg.require_initial_gain)
    sel_idx, _ = mi.blockwise_map(kern, part, solver)
    timings["inference"] = (time.perf_counter() - t0) * 1e3

    selected = cand.times[np.sort(sel_idx)]
    report = DetectionReport(config=cfg, candidates=cand, qualities=q,
                             selected=selected,
                             degenerate_candidates=flags, timings_ms=timings)
    if post_filter is not None:
        report.selected = np.asarray(post_filter(report.selected, report))
    return report


def generate_piecewise_gaussian(seed: int, segments):
    """Concatenated Gaussian segments; returns the series and true change times.

    segments: iterable of (length, mean, cov).  Scalars are promoted to 1-D;
    in D dimensions mean is a length-D vector and cov a D x D matrix (a
    scalar cov means cov * I).
    """
    segs = list(segments)
    if not segs:
        raise ValueError("need at least one segment")
    rng = np.random.default_rng(seed)
    chunks = []
    changes = []
    total = 0
    for length, mean, cov in segs:
        length = int(length)
        if length < 2:
            raise ValueError("segment lengths must be at least 2")
        mu = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        D = mu.size
        C = np.asarray(cov, dtype=np.float64)
        if C.ndim == 0:
            C = float(C) * np.eye(D)
        if C.shape != (D, D):
            raise ValueError("covariance shape does not match mean dimension")
        try:
            F = np.linalg.cholesky(C + 1e-12 * np.eye(D))
        except np.linalg.LinAlgError:
            raise ValueError("segment covariance is not PSD") from None
        chunks.append(mu + rng.standard_normal((length, D)) @ F.T)
        total += length
        changes.append(total)
    return np.vstack(chunks), np.asarray(changes[:-1], dtype=np.float64)


def generate_poisson_events(seed: int, segments):
    """Concatenated homogeneous Poisson segments; returns events and true changes.

    segments: iterable of (duration, rate).
    """
    segs = list(segments)
    if not segs:
        raise ValueError("need at least one segment")
    rng = np.random.default_rng(seed)
    events = []
    changes = []
    offset = 0.0
    for duration, rate in segs:
        if duration <= 0 or rate <= 0:
            raise ValueError("durations and rates must be positive")
        t = offset
        while True:
            t += rng.exponential(1.0 / rate)
            if t >= offset + duration:
                break
            events.append(t)
        offset += duration
        changes.append(offset)
    return np.asarray(events), np.asarray(changes[:-1])
