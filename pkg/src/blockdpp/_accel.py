"""Hot numeric kernels with numba-compiled and pure-numpy variants.

The compiled path is the default.  Set ``BLOCKDPP_NO_NUMBA=1`` before import
to force the pure-numpy fallback (useful for debugging and for the
benchmark in ``benchmarks/bench_accel.py``).
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("BLOCKDPP_NO_NUMBA", "").lower() not in ("1", "true", "yes")
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False


def _greedy_loop(K, require_initial_gain, diag_tol):
    # Greedy selection with rank-one conditional-kernel downdates.
    # K is overwritten.  Returns picks in selection order.
    n = K.shape[0]
    alive = np.ones(n, np.bool_)
    picks = np.empty(n, np.int64)
    npick = 0
    first = True
    while True:
        best = -1
        best_val = -np.inf
        for i in range(n):
            if not alive[i]:
                continue
            d = K[i, i]
            if d <= diag_tol:
                continue
            if (require_initial_gain or not first) and d <= 1.0:
                continue
            if d > best_val:
                best_val = d
                best = i
        if best < 0:
            break
        piv = K[best, best]
        alive[best] = False
        picks[npick] = best
        npick += 1
        for r in range(n):
            if alive[r]:
                cr = K[r, best]
                if cr != 0.0:
                    for c in range(n):
                        if alive[c]:
                            K[r, c] -= cr * K[c, best] / piv
        first = False
    return picks[:npick]


def _greedy_numpy(K, require_initial_gain, diag_tol):
    # Vectorized twin of _greedy_loop; must stay behaviourally identical.
    n = K.shape[0]
    alive = np.ones(n, np.bool_)
    picks = []
    first = True
    while True:
        diag = np.where(alive, np.diagonal(K), -np.inf)
        diag = np.where(diag > diag_tol, diag, -np.inf)
        if require_initial_gain or not first:
            diag = np.where(diag > 1.0, diag, -np.inf)
        best = int(np.argmax(diag))
        if not np.isfinite(diag[best]):
            break
        piv = K[best, best]
        alive[best] = False
        picks.append(best)
        col = np.where(alive, K[:, best], 0.0)
        K -= np.outer(col, col) / piv
        first = False
    return np.asarray(picks, dtype=np.int64)


def _subset_dets_loop(L):
    # Determinant of every principal submatrix, indexed by bitmask.
    n = L.shape[0]
    total = 1 << n
    out = np.empty(total)
    out[0] = 1.0
    idx = np.empty(n, np.int64)
    for mask in range(1, total):
        k = 0
        for i in range(n):
            if (mask >> i) & 1:
                idx[k] = i
                k += 1
        sub = np.empty((k, k))
        for a in range(k):
            for b in range(k):
                sub[a, b] = L[idx[a], idx[b]]
        out[mask] = np.linalg.det(sub)
    return out


def _blockwise_factory(greedy_fn):
    # Fused block-wise greedy: Schur-conditioned sub-kernels, PSD clamp,
    # greedy sub-inference, all in one loop so the compiled path has no
    # per-block Python overhead.
    def core(A, starts, stops, require_initial_gain, diag_tol):
        n = A.shape[0]
        selected = np.empty(n, np.int64)
        nsel = 0
        prev_sel = np.empty(0, np.int64)
        prev_inv = np.empty((0, 0))
        for b in range(starts.size):
            s, e = starts[b], stops[b]
            red = A[s:e, s:e].copy()
            if prev_sel.size > 0:
                cross = np.ascontiguousarray(A[prev_sel][:, s:e])
                cross_t = np.empty((cross.shape[1], cross.shape[0]))
                cross_t[:, :] = cross.T
                red -= cross_t @ (prev_inv @ cross)
                red = 0.5 * (red + red.T)
            evmin = np.linalg.eigvalsh(red)[0]
            if evmin < 0.0:
                for i in range(e - s):
                    red[i, i] += -evmin
            picks = np.sort(greedy_fn(red.copy(), require_initial_gain, diag_tol))
            for i in picks:
                selected[nsel] = i + s
                nsel += 1
            if picks.size > 0:
                sub = np.ascontiguousarray(red[picks][:, picks])
                prev_inv = np.empty_like(sub)
                prev_inv[:, :] = np.linalg.inv(sub)
                prev_sel = picks + s
            else:
                prev_inv = np.empty((0, 0))
                prev_sel = np.empty(0, np.int64)
        return selected[:nsel]

    return core


if NUMBA_ENABLED:
    greedy_select = njit(cache=True)(_greedy_loop)
    subset_dets = njit(cache=True)(_subset_dets_loop)
    blockwise_greedy = njit(_blockwise_factory(greedy_select))
else:
    greedy_select = _greedy_numpy
    subset_dets = _subset_dets_loop
    blockwise_greedy = _blockwise_factory(_greedy_numpy)
