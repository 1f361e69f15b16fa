"""DPP kernel construction and almost-block-diagonal structure handling.

A kernel is *almost block diagonal* when it is block tridiagonal and each
off-diagonal block is nonzero only in a bottom-left corner of bounded size.
``gamma_partition`` finds the finest such partition for a given corner
bound; ``generate_synthetic_kernel`` draws random kernels with a known
ground-truth partition for benchmarking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import matrix_core as mc

DEFAULT_EPS_ZERO = 1e-12


@dataclass(frozen=True)
class BlockPartition:
    """Consecutive block sizes plus the corner bound gamma."""

    block_sizes: Tuple[int, ...]
    gamma: int = 0

    def __post_init__(self):
        if not self.block_sizes or any(s < 1 for s in self.block_sizes):
            raise ValueError("block sizes must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @property
    def n(self) -> int:
        return int(sum(self.block_sizes))

    @property
    def m(self) -> int:
        return len(self.block_sizes)

    def cuts(self) -> np.ndarray:
        """Interior cut positions (index of the first element of each block after the first)."""
        return np.cumsum(self.block_sizes)[:-1]

    def ranges(self):
        """(start, stop) half-open index range of each block."""
        stops = np.cumsum(self.block_sizes)
        starts = stops - np.asarray(self.block_sizes)
        return list(zip(starts.tolist(), stops.tolist()))

    def to_json_dict(self) -> dict:
        return {"block_sizes": list(self.block_sizes), "gamma": int(self.gamma)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "BlockPartition":
        return cls(tuple(int(s) for s in d["block_sizes"]), int(d["gamma"]))


@dataclass
class DppKernel:
    """PSD kernel matrix, optionally carrying its quality/similarity factors."""

    L: np.ndarray
    quality: Optional[np.ndarray] = None
    similarity: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.L.shape[0]


def kernel_matrix(L) -> np.ndarray:
    """Accept a DppKernel or a raw array; return the matrix."""
    if isinstance(L, DppKernel):
        return L.L
    return np.asarray(L, dtype=np.float64)


@dataclass(frozen=True)
class SyntheticKernelSpec:
    """Recipe for random almost-block-diagonal Gram kernels."""

    N: int = 500
    block_size_range: Tuple[int, int] = (10, 30)
    overlap_choices: Tuple[int, ...] = (0, 2, 4, 6)
    feature_dim: int = 50
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.block_size_range
        if not (1 <= lo <= hi):
            raise ValueError("block_size_range must satisfy 1 <= min <= max")
        if self.N < lo:
            raise ValueError("N smaller than the minimum block size")
        if any(g < 0 for g in self.overlap_choices):
            raise ValueError("overlaps must be non-negative")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")


def build_quality_diversity_kernel(q, S) -> DppKernel:
    """L = diag(q) @ S @ diag(q) with provenance recorded."""
    q = np.asarray(q, dtype=np.float64).ravel()
    S = mc.as_matrix(S)
    if q.size != S.shape[0]:
        raise ValueError("quality vector and similarity matrix sizes differ")
    if np.any(q <= 0.0) or not np.all(np.isfinite(q)):
        raise ValueError("quality values must be positive and finite")
    if q.size and mc.min_eigenvalue(S) < -1e-8:
        raise ValueError("similarity matrix is not PSD to tolerance")
    L = q[:, None] * S * q[None, :]
    return DppKernel(L=L, quality=q.copy(), similarity=S.copy())


def gaussian_position_similarity(times, sigma: float,
                                 eps_zero: float = DEFAULT_EPS_ZERO) -> np.ndarray:
    """S_ij = exp(-(t_i - t_j)^2 / sigma^2), truncated to exact zeros below eps_zero.

    The truncation is what produces the almost-block-diagonal structure when
    positions cluster.
    """
    t = np.asarray(times, dtype=np.float64).ravel()
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    D = t[:, None] - t[None, :]
    S = np.exp(-(D * D) / (sigma * sigma))
    S[S < eps_zero] = 0.0
    np.fill_diagonal(S, 1.0)
    return S


def _invalid_cuts(L: np.ndarray, gamma: int, eps_zero: float) -> np.ndarray:
    """Boolean mask over cut positions 1..n-1 (index c marks the cut before row c).

    A nonzero entry (r, c') with c' - r > gamma forbids every cut c in
    (r, c'] except none; with c' - r <= gamma it forbids cuts outside
    [c'-gamma+1, r+gamma], which is the whole interval, so it forbids none.
    """
    n = L.shape[0]
    rows, cols = np.nonzero(np.triu(np.abs(L) > eps_zero, 1))
    keep = cols - rows > gamma
    r, c = rows[keep], cols[keep]
    diff = np.zeros(n + 2, dtype=np.int64)
    # invalid interval 1: cuts in [r+1, c-gamma]
    np.add.at(diff, r + 1, 1)
    np.add.at(diff, c - gamma + 1, -1)
    # invalid interval 2: cuts in [r+gamma+1, c]
    np.add.at(diff, r + gamma + 1, 1)
    np.add.at(diff, c + 1, -1)
    return np.cumsum(diff)[:n] > 0  # position 0 unused


def gamma_partition(L, gamma: int, eps_zero: float = DEFAULT_EPS_ZERO) -> BlockPartition:
    """Finest partition whose cross-cut nonzeros all fit in gamma x gamma corners.

    Cut validity is independent across cuts, so taking every valid cut
    attains the maximum block count.
    """
    A = kernel_matrix(L)
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    n = A.shape[0]
    invalid = _invalid_cuts(A, gamma, eps_zero)
    cuts = [c for c in range(1, n) if not invalid[c]]
    bounds = [0] + cuts + [n]
    sizes = tuple(b - a for a, b in zip(bounds[:-1], bounds[1:]))
    return BlockPartition(sizes, gamma)


def validate_partition(L, P: BlockPartition,
                       eps_zero: float = DEFAULT_EPS_ZERO) -> bool:
    """True iff every cut of P is valid at P.gamma."""
    A = kernel_matrix(L)
    if P.n != A.shape[0]:
        raise ValueError("partition size does not match kernel dimension")
    invalid = _invalid_cuts(A, P.gamma, eps_zero)
    return not any(invalid[c] for c in P.cuts())


def generate_synthetic_kernel(spec: SyntheticKernelSpec):
    """Random almost-block-diagonal Gram kernel with its ground-truth partition.

    Uses numpy's default_rng (PCG64), so outputs are reproducible across
    platforms for a fixed seed.  Masking a Gram matrix can break PSD, so a
    minimal diagonal shift is applied afterwards.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.block_size_range

    sizes = []
    total = 0
    while total < spec.N:
        s = int(rng.integers(lo, hi + 1))
        if total + s > spec.N:
            s = spec.N - total  # last block absorbs the remainder
        sizes.append(s)
        total += s

    m = len(sizes)
    overlaps = [int(rng.choice(np.asarray(spec.overlap_choices)))
                for _ in range(m - 1)]
    # Corners must fit inside the two adjacent blocks.
    overlaps = [min(g, sizes[i], sizes[i + 1]) for i, g in enumerate(overlaps)]

    B = rng.standard_normal((spec.feature_dim, spec.N))
    L = B.T @ B

    mask = np.zeros((spec.N, spec.N), dtype=bool)
    stops = np.cumsum(sizes)
    starts = stops - np.asarray(sizes)
    for a, b in zip(starts, stops):
        mask[a:b, a:b] = True
    for i, g in enumerate(overlaps):
        c = stops[i]
        if g > 0:
            mask[c - g:c, c:c + g] = True
            mask[c:c + g, c - g:c] = True
    L = np.where(mask, L, 0.0)
    L = 0.5 * (L + L.T)
    L = mc.psd_repair(L, eps=1e-8)

    gamma = max(overlaps) if overlaps else 0
    return DppKernel(L=L), BlockPartition(tuple(sizes), gamma)
