"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

Kernel timings call both implementations in-process.  The end-to-end row
runs a warmed-up 32x32 greedy experiment in a subprocess per backend, since the
backend is fixed at import time by ``GEARMATRIX_NO_NUMBA``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gearmatrix import kernels
from gearmatrix.core import GridConfig, geometry

E2E = (
    "import time;from gearmatrix.harness import ExperimentSpec, run_experiment;"
    "s=ExperimentSpec('grid_size',(32,),trials=8,seed=1);run_experiment(s);"
    "t=time.perf_counter();run_experiment(s);"
    "print(time.perf_counter()-t)"
)


def bench(fn, repeat):
    fn()  # warm-up (JIT compile)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not kernels.USING_NUMBA:
        sys.exit("numba is not available (or GEARMATRIX_NO_NUMBA is set); nothing to compare")

    rng = np.random.default_rng(0)
    cfg = GridConfig(64, 64, 4)
    pairs = geometry(cfg).pairs[0]
    occ = (rng.random((256, cfg.n_slots)) < 0.05).astype(np.uint8)
    mask = (rng.random(64 * 64) < 0.1).astype(np.uint8)
    cur = rng.integers(0, 64, size=(4096, 2))
    tgt = rng.integers(0, 64, size=(4096, 2))

    cases = [
        ("pair_conflicts_batch 256x16384", lambda: kernels.pair_conflicts_batch(occ, pairs),
         lambda: kernels.pair_conflicts_batch_np(occ, pairs)),
        ("pair_conflicts 16384", lambda: kernels.pair_conflicts(occ[0], pairs),
         lambda: kernels.pair_conflicts_np(occ[0], pairs)),
        ("grid_independent 64x64", lambda: kernels.grid_independent(mask, 64, 64),
         lambda: kernels.grid_independent_np(mask, 64, 64)),
        ("manhattan_sum 4096", lambda: kernels.manhattan_sum(cur, tgt),
         lambda: kernels.manhattan_sum_np(cur, tgt)),
    ]
    print(f"{'kernel':34} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, fast, slow in cases:
        a, b = bench(fast, args.repeat) * 1e3, bench(slow, args.repeat) * 1e3
        print(f"{name:34} {a:10.4f} {b:10.4f} {b / a:8.2f}")

    times = []
    for flag in ("0", "1"):
        env = dict(os.environ, GEARMATRIX_NO_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        times.append(float(out.stdout) * 1e3)
    print(f"{'experiment 32x32 q=4, 8 trials':34} {times[0]:10.1f} {times[1]:10.1f} {times[1] / times[0]:8.2f}")


if __name__ == "__main__":
    main()
