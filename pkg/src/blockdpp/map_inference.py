"""MAP inference engines for DPPs.

``greedy_map`` is the classic greedy heuristic on the conditional kernel;
``blockwise_map`` runs it (or any plug-in sub-solver) block by block over an
almost-block-diagonal kernel, conditioning each block on the previous
block's selection through a Schur-complement update.  ``exhaustive_map``
enumerates all subsets and serves as the oracle in tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import matrix_core as mc
from ._accel import greedy_select, subset_dets
from .errors import SingularToTolerance
from .kernel_model import BlockPartition, kernel_matrix

# Diagonal entries at or below this are never selectable (determinant-zero
# contributors).
UNSELECTABLE_DIAG = 1e-12

SubSolver = Callable[[np.ndarray], np.ndarray]


def greedy_map(L, require_initial_gain: bool = False,
               method: str = "fast") -> np.ndarray:
    """Greedy MAP selection.

    The first pick is the unconditional diagonal argmax (the classic
    initialization); set require_initial_gain=True to also demand a
    probability gain (diagonal > 1) for the first pick.  Ties break to the
    lowest index.

    method="fast" uses rank-one Schur downdates of the conditional kernel;
    method="reference" recomputes the conditional kernel from its defining
    double-inverse formula each step.  Both agree to tight tolerance.
    """
    A = mc.as_matrix(kernel_matrix(L))
    if A.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    if method == "fast":
        picks = greedy_select(A.copy(), require_initial_gain, UNSELECTABLE_DIAG)
        return np.sort(np.asarray(picks, dtype=np.int64))
    if method != "reference":
        raise ValueError(f"unknown method {method!r}")
    return _greedy_reference(A, require_initial_gain)


def _greedy_reference(A: np.ndarray, require_initial_gain: bool) -> np.ndarray:
    # Literal transcription: K* = ([(K + I_rest)^-1]_rest)^-1 - I after each pick.
    remaining = list(range(A.shape[0]))
    K = A.copy()
    selected: List[int] = []
    first = True
    while True:
        diag = np.diagonal(K).copy()
        ok = diag > UNSELECTABLE_DIAG
        if require_initial_gain or not first:
            ok &= diag > 1.0
        if not np.any(ok):
            break
        local = int(np.argmax(np.where(ok, diag, -np.inf)))
        selected.append(remaining[local])
        rest = [j for j in range(len(remaining)) if j != local]
        shift = np.eye(len(remaining))
        shift[local, local] = 0.0
        inner = np.linalg.inv(K + shift)
        K = np.linalg.inv(inner[np.ix_(rest, rest)]) - np.eye(len(rest))
        K = 0.5 * (K + K.T)
        remaining = [remaining[j] for j in rest]
        first = False
    return np.sort(np.asarray(selected, dtype=np.int64))


def conditional_kernel(L, a_in, a_out) -> np.ndarray:
    """Kernel of the DPP conditioned on a_in included and a_out excluded.

    Returned over the surviving indices (everything outside a_in and a_out,
    in increasing order):  ([ (L_rest + I_keep)^-1 ]_keep)^-1 - I, where
    rest drops a_out and keep additionally drops a_in.
    """
    A = mc.as_matrix(kernel_matrix(L))
    n = A.shape[0]
    ain = mc.as_index_set(a_in, n)
    aout = mc.as_index_set(a_out, n)
    if np.intersect1d(ain, aout).size:
        raise ValueError("a_in and a_out must be disjoint")
    rest = np.setdiff1d(np.arange(n), aout)
    keep_local = np.flatnonzero(~np.isin(rest, ain))
    in_local = np.flatnonzero(np.isin(rest, ain))
    Ar = A[np.ix_(rest, rest)]
    shift = np.zeros_like(Ar)
    shift[keep_local, keep_local] = 1.0
    try:
        inner = np.linalg.inv(Ar + shift)
        K = np.linalg.inv(inner[np.ix_(keep_local, keep_local)])
    except np.linalg.LinAlgError as exc:
        raise SingularToTolerance(str(exc)) from None
    K = K - np.eye(keep_local.size)
    return 0.5 * (K + K.T)


@dataclass
class BlockTrace:
    """What happened in one block of a block-wise inference run."""

    span: Tuple[int, int]                 # [start, stop) global index range
    reduced_kernel: np.ndarray            # conditioned sub-kernel over the block
    selected: np.ndarray                  # global indices chosen in this block
    reduced_selected_kernel: np.ndarray   # reduced kernel restricted to the picks
    ms: float


@dataclass
class InferenceTrace:
    blocks: List[BlockTrace] = field(default_factory=list)


def blockwise_map(L, P: BlockPartition, f: SubSolver = greedy_map,
                  clamp_psd: bool = True,
                  collect_trace: bool = True) -> Tuple[np.ndarray, InferenceTrace]:
    """Sequential block-wise MAP inference.

    Each block's sub-kernel is the original diagonal block minus a Schur
    correction through the previous block's selected items (cross terms to
    earlier blocks vanish by the almost-block-diagonal structure).  The
    correction is clamped back to PSD (zero shift) before the sub-solver
    runs, so float noise cannot leak negative eigenvalues into f.
    """
    A = mc.as_matrix(kernel_matrix(L))
    if P.n != A.shape[0]:
        raise ValueError("partition does not match kernel dimension")
    if f is greedy_map and clamp_psd and not collect_trace:
        # fused compiled path; identical selection, no per-block records
        from ._accel import blockwise_greedy
        ranges = P.ranges()
        starts = np.asarray([r[0] for r in ranges], dtype=np.int64)
        stops = np.asarray([r[1] for r in ranges], dtype=np.int64)
        sel = blockwise_greedy(np.ascontiguousarray(A), starts, stops,
                               False, UNSELECTABLE_DIAG)
        return np.asarray(sel, dtype=np.int64), InferenceTrace()
    trace = InferenceTrace()
    selected: List[np.ndarray] = []
    prev_sel = np.empty(0, dtype=np.int64)      # global indices
    prev_reduced_sel = np.empty((0, 0))         # their reduced kernel
    for start, stop in P.ranges():
        t0 = time.perf_counter()
        block = A[start:stop, start:stop]
        if prev_sel.size:
            cross = A[np.ix_(prev_sel, np.arange(start, stop))]
            reduced = block - cross.T @ mc.inverse_spd(prev_reduced_sel) @ cross
            reduced = 0.5 * (reduced + reduced.T)
        else:
            reduced = block.copy()
        if clamp_psd:
            reduced = mc.psd_repair(reduced, eps=0.0)
        local = np.asarray(f(reduced), dtype=np.int64)
        if local.size and (local.min() < 0 or local.max() >= stop - start):
            raise IndexError("sub-solver returned out-of-range indices")
        local = np.sort(local)
        global_sel = local + start
        reduced_sel = reduced[np.ix_(local, local)]
        trace.blocks.append(BlockTrace(
            span=(start, stop),
            reduced_kernel=reduced,
            selected=global_sel,
            reduced_selected_kernel=reduced_sel,
            ms=(time.perf_counter() - t0) * 1e3,
        ))
        selected.append(global_sel)
        prev_sel = global_sel
        prev_reduced_sel = reduced_sel
    out = np.concatenate(selected) if selected else np.empty(0, dtype=np.int64)
    return out, trace


def blockwise_map_conditional_form(L, P: BlockPartition,
                                   f: SubSolver = greedy_map,
                                   clamp_psd: bool = True) -> np.ndarray:
    """Equivalent formulation via explicit conditional kernels.

    Block i's sub-problem is the kernel over the first i blocks conditioned
    on the previous selections being in and everything else previously seen
    being out.  Must return the same set as blockwise_map for any
    deterministic f; kept as a cross-check oracle.
    """
    A = mc.as_matrix(kernel_matrix(L))
    if P.n != A.shape[0]:
        raise ValueError("partition does not match kernel dimension")
    chosen: List[np.ndarray] = []
    for start, stop in P.ranges():
        ground = A[:stop, :stop]
        prev = (np.concatenate(chosen) if chosen
                else np.empty(0, dtype=np.int64))
        a_out = np.setdiff1d(np.arange(start), prev)
        K = conditional_kernel(ground, prev, a_out)
        if clamp_psd:
            K = mc.psd_repair(K, eps=0.0)
        local = np.sort(np.asarray(f(K), dtype=np.int64))
        chosen.append(local + start)
    return (np.concatenate(chosen) if chosen
            else np.empty(0, dtype=np.int64))


def exhaustive_map(L, max_dim: int = 20) -> np.ndarray:
    """Exact MAP by enumeration of all subsets.

    Ties break to the smaller cardinality, then the lexicographically
    smallest index list.  Refuses dimensions above max_dim.
    """
    A = mc.as_matrix(kernel_matrix(L))
    n = A.shape[0]
    if n > max_dim:
        raise ValueError(f"dimension {n} exceeds exhaustive limit {max_dim}")
    if n == 0:
        return np.empty(0, dtype=np.int64)
    dets = subset_dets(np.ascontiguousarray(A))
    best_mask, best_det = 0, 1.0  # the empty set, det 1
    for mask in _masks_by_card_then_lex(n):
        if dets[mask] > best_det:
            best_mask, best_det = mask, dets[mask]
    return np.asarray([i for i in range(n) if (best_mask >> i) & 1],
                      dtype=np.int64)


def _masks_by_card_then_lex(n: int):
    from itertools import combinations
    for k in range(1, n + 1):
        for combo in combinations(range(n), k):
            mask = 0
            for i in combo:
                mask |= 1 << i
            yield mask


def log_prob_unnormalized(L, C) -> float:
    """log det of the selected submatrix; empty selection gives 0, singular -inf."""
    A = mc.as_matrix(kernel_matrix(L))
    idx = mc.as_index_set(C, A.shape[0])
    if idx.size == 0:
        return 0.0
    try:
        return mc.log_det(A[np.ix_(idx, idx)])
    except SingularToTolerance:
        return float("-inf")
