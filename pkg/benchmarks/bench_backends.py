"""Time the numba and numpy batch backends on the same uniforms.

    python3 benchmarks/bench_backends.py [--runs N] [--config NAME] [--repeat K]
"""
import argparse
import time

import numpy as np

from reduxsim import kernels
from reduxsim.config import load_config


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=100_000)
    ap.add_argument("--config", default="observed_sequential")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = load_config(args.config)
    sc = cfg.compiled()
    u = np.random.default_rng(0).random((args.runs, kernels.DRAWS_PER_RUN))
    print(f"config={args.config} runs={args.runs} steps/run={sc.n_steps}")

    results = {}
    if kernels.HAVE_NUMBA:
        t0 = time.perf_counter()
        kernels.run_batch(sc, u[:2], "numba")
        print(f"numba first call (compile or cache load): {time.perf_counter() - t0:.2f}s")
        results["numba"] = timed(lambda: kernels.run_batch(sc, u, "numba"), args.repeat)
    else:
        print("numba unavailable or disabled; timing numpy only")
    results["numpy"] = timed(lambda: kernels.run_batch(sc, u, "numpy"), max(1, args.repeat // 3))

    for name, (t, _) in results.items():
        print(f"{name:>6}: {t:8.3f}s  {args.runs / t:12.0f} runs/s")
    if len(results) == 2:
        same = results["numba"][1].equals(results["numpy"][1])
        print(f"speedup numba/numpy: {results['numpy'][0] / results['numba'][0]:.1f}x; identical results: {same}")


if __name__ == "__main__":
    main()
