#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Run after building the extension (pip install -e . --no-build-isolation):

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from qmemsim import _kernels_py

try:
    from qmemsim import _kernels
except ImportError:
    _kernels = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_bin_sweep(bins=10_000, columns=8):
    rng = np.random.default_rng(0)
    kc = rng.normal(size=bins) * 0.01
    ks = rng.normal(size=bins) * 0.01
    base = rng.normal(size=(2 * bins + 4, columns))
    rows = []
    for name, mod in (("numpy", _kernels_py), ("cython", _kernels)):
        if mod is None:
            continue
        work = np.ascontiguousarray(base.copy())
        dt = timeit(mod.bin_sweep, kc, ks, work)
        rows.append((name, dt))
    return f"bin_sweep ({bins} bins x {columns} cols)", rows


def bench_two_stage(n=1_000_000):
    rng = np.random.default_rng(1)
    z1 = rng.normal(size=n)
    z2 = rng.normal(size=n)
    out1 = np.empty(n)
    out2 = np.empty(n)
    rows = []
    for name, mod in (("numpy", _kernels_py), ("cython", _kernels)):
        if mod is None:
            continue
        dt = timeit(
            mod.two_stage_outcomes, z1, z2, 0.1, 1.2, -0.3, 0.7, 0.9, out1, out2
        )
        rows.append((name, dt))
    return f"two_stage_outcomes ({n} trials)", rows


def main():
    if _kernels is None:
        print("note: compiled extension not available; numpy only\n")
    for title, rows in (bench_bin_sweep(), bench_two_stage()):
        print(title)
        baseline = rows[0][1]
        for name, dt in rows:
            speedup = baseline / dt
            print(f"  {name:>7}: {dt * 1e3:8.2f} ms   ({speedup:5.2f}x)")
        print()


if __name__ == "__main__":
    main()
