#!/usr/bin/env python3
"""Compare the compiled (numba) and pure-numpy execution paths.

Times full-kernel greedy MAP and block-wise MAP on synthetic kernels, once
with the default compiled kernels and once with ``BLOCKDPP_NO_NUMBA=1``.
The flag is read at import time, so the fallback half runs in a child
process.

Usage:  python benchmarks/bench_accel.py [--n 500] [--kernels 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def measure(n, kernels, repeats):
    import numpy as np

    import blockdpp as bd
    from blockdpp._accel import NUMBA_ENABLED

    out = {"numba": NUMBA_ENABLED, "full_ms": [], "blockwise_ms": {}}
    gammas = (0, 2, 4, 6)
    for g in gammas:
        out["blockwise_ms"][g] = []
    for seed in range(kernels):
        kern, _ = bd.generate_synthetic_kernel(
            bd.SyntheticKernelSpec(N=n, seed=seed))
        L = kern.L
        bd.greedy_map(L)  # warm-up (JIT compilation on the compiled path)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            bd.greedy_map(L)
            times.append(time.perf_counter() - t0)
        out["full_ms"].append(1e3 * float(np.median(times)))
        for g in gammas:
            part = bd.gamma_partition(L, g)
            bd.blockwise_map(L, part, collect_trace=False)  # warm-up
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                bd.blockwise_map(L, part, collect_trace=False)
                times.append(time.perf_counter() - t0)
            out["blockwise_ms"][g].append(1e3 * float(np.median(times)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--kernels", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--emit-json", action="store_true",
                    help="internal: print raw measurements and exit")
    args = ap.parse_args()

    if args.emit_json:
        print(json.dumps(measure(args.n, args.kernels, args.repeats)))
        return

    results = {}
    for label, env_flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, BLOCKDPP_NO_NUMBA=env_flag)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--emit-json",
             "--n", str(args.n), "--kernels", str(args.kernels),
             "--repeats", str(args.repeats)],
            env=env, capture_output=True, text=True, check=True)
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])

    assert results["numba"]["numba"] and not results["numpy"]["numba"], \
        "numba availability did not match the requested mode"

    def mean(xs):
        return sum(xs) / len(xs)

    print(f"N={args.n}, {args.kernels} kernels, median of {args.repeats} runs")
    print(f"{'operation':<22}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    a = mean(results["numba"]["full_ms"])
    b = mean(results["numpy"]["full_ms"])
    print(f"{'greedy_map (full)':<22}{a:>12.2f}{b:>12.2f}{b / a:>10.2f}x")
    for g in ("0", "2", "4", "6"):
        a = mean(results["numba"]["blockwise_ms"][g])
        b = mean(results["numpy"]["blockwise_ms"][g])
        print(f"{'blockwise gamma=' + g:<22}{a:>12.2f}{b:>12.2f}"
              f"{b / a:>10.2f}x")


if __name__ == "__main__":
    main()
