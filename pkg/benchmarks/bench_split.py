"""Benchmark the compiled split-search kernel against the numpy fallback.

Runs the raw best_split kernel on growing row counts and a full
regression-tree fit with either backend, printing a timing table.

Usage: python3 benchmarks/bench_split.py [--trees]
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np


def bench_kernels():
    try:
        from cfstcap.trees._split_cy import best_split as split_cy
    except ImportError:
        print("compiled kernel unavailable; build the extension first")
        return
    from cfstcap.trees._split_py import best_split as split_py

    rng = np.random.default_rng(0)
    print(f"{'rows':>8} {'features':>8} {'python (ms)':>12} "
          f"{'cython (ms)':>12} {'speedup':>8}")
    for n in (200, 1000, 5000, 20000):
        m = 10
        X = np.ascontiguousarray(rng.uniform(size=(n, m)))
        y = rng.normal(size=n)
        rows = np.arange(n)
        feats = np.arange(m)
        timings = {}
        for label, fn in (("python", split_py), ("cython", split_cy)):
            fn(X, y, rows, feats, 1)  # warm up
            reps = max(3, 200_000 // n)
            start = time.perf_counter()
            for _ in range(reps):
                out = fn(X, y, rows, feats, 1)
            timings[label] = (time.perf_counter() - start) / reps * 1e3
        a, b = split_py(X, y, rows, feats, 1), split_cy(X, y, rows, feats, 1)
        assert a[0] == b[0] and abs(a[1] - b[1]) < 1e-12, "backend mismatch"
        print(f"{n:>8} {m:>8} {timings['python']:>12.3f} "
              f"{timings['cython']:>12.3f} "
              f"{timings['python'] / timings['cython']:>7.1f}x")


def bench_tree_fit():
    """Full tree fit per backend, each in a fresh interpreter so the
    import-time backend selection takes effect."""
    code = (
        "import time, numpy as np\n"
        "from cfstcap.trees import fit_regression_tree, SPLIT_BACKEND\n"
        "rng = np.random.default_rng(0)\n"
        "X = rng.uniform(size=(5000, 10)); y = rng.normal(size=5000)\n"
        "fit_regression_tree(X, y, max_depth=8)\n"
        "t = time.perf_counter()\n"
        "fit_regression_tree(X, y, max_depth=8)\n"
        "print(f'{SPLIT_BACKEND}: {time.perf_counter() - t:.3f} s')\n"
    )
    for force in ("0", "1"):
        env = dict(os.environ, CFSTCAP_FORCE_PYTHON_KERNEL=force)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trees", action="store_true",
                        help="also benchmark a full tree fit per backend")
    args = parser.parse_args()
    bench_kernels()
    if args.trees:
        print()
        bench_tree_fit()
