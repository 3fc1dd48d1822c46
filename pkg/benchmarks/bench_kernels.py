#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Run after `pip install -e . --no-build-isolation`:

    python3 benchmarks/bench_kernels.py [--n 2000000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from heavytrade.backend import available_backends
from heavytrade.noise import GaussianNoise, SmoothedTwoPoint, StudentTNoise


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.n
    price = rng.normal(size=n)
    v = rng.normal(size=n)
    w = rng.normal(size=n)
    deltas = rng.normal(size=n)
    y = rng.standard_t(1.8, size=n)
    x2 = rng.random((n, 2))
    cells = rng.integers(0, 64, size=n)

    gauss = GaussianNoise().profile()
    student = StudentTNoise(1.8, moment_order=1.5).profile()
    pieces = SmoothedTwoPoint([(-0.3, 0.5), (0.3, 0.5)], density_bound=2.0,
                              moment_order=1.5).profile()

    cases = {
        "gain_batch": lambda k: k.gain_batch(price, v, w),
        "regret_profile[t/t]": lambda k: k.regret_profile(deltas, *student, *student),
        "regret_profile[pieces]": lambda k: k.regret_profile(deltas, *pieces, *pieces),
        "regret_profile[gauss]": lambda k: k.regret_profile(deltas, *gauss, *gauss),
        "truncated_mean": lambda k: k.truncated_mean_given_tau(y, 25.0),
        "score_truncated_means": lambda k: k.score_truncated_means(x2, y, 25.0),
        "cell_truncated_stats": lambda k: k.cell_truncated_stats(cells, y, 64, 4.6, 1.5, 12.0),
    }

    backends = available_backends()
    names = [b.BACKEND_NAME for b in backends]
    print(f"n = {n:,} elements, best of {args.repeat}\n")
    header = f"{'kernel':<24}" + "".join(f"{nm:>14}" for nm in names)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for case, fn in cases.items():
        times = [timeit(lambda b=b: fn(b), args.repeat) for b in backends]
        row = f"{case:<24}" + "".join(f"{t * 1e3:>11.1f} ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
