#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the numpy fallback.

The lattice shapes mirror real workloads: label counts 9/12/18 are the
3/4/6-class joint alphabets, sequence lengths 12-60 cover paragraph pairs
up to the cross-validation sizes, and the id sequences match tokenized
sentence lengths.

Usage: python benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from revid._kernels import pure

try:
    from revid._kernels import _speedups
except ImportError:
    _speedups = None


def bench(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def lattice_args(rng, T, K):
    emit = np.ascontiguousarray(rng.normal(scale=3, size=(T, K)))
    trans = np.ascontiguousarray(rng.normal(size=(K, K)))
    return emit, trans


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    rows = []
    for T, K in [(12, 9), (12, 18), (30, 12), (60, 18)]:
        emit, trans = lattice_args(rng, T, K)
        alphas, logz = pure.log_forward(emit, trans)
        betas = pure.log_backward(emit, trans)
        cases = [
            (f"log_forward T={T} K={K}", "log_forward", (emit, trans)),
            (f"log_backward T={T} K={K}", "log_backward", (emit, trans)),
            (f"viterbi T={T} K={K}", "viterbi", (emit, trans)),
            (
                f"trans_expect T={T} K={K}",
                "transition_expectations",
                (emit, trans, alphas, betas, logz),
            ),
        ]
        for name, fname, fargs in cases:
            t_pure = bench(getattr(pure, fname), fargs, args.repeats)
            t_fast = (
                bench(getattr(_speedups, fname), fargs, args.repeats)
                if _speedups
                else None
            )
            rows.append((name, t_pure, t_fast))

    for la, lb in [(12, 10), (40, 35), (120, 110)]:
        a = rng.integers(0, 50, size=la).astype(np.int32)
        b = rng.integers(0, 50, size=lb).astype(np.int32)
        t_pure = bench(pure.levenshtein_ids, (a, b), args.repeats)
        t_fast = (
            bench(_speedups.levenshtein_ids, (a, b), args.repeats)
            if _speedups
            else None
        )
        rows.append((f"levenshtein {la}x{lb}", t_pure, t_fast))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel'.ljust(width)}  {'pure':>10}  {'compiled':>10}  {'speedup':>8}")
    for name, t_pure, t_fast in rows:
        if t_fast is None:
            print(f"{name.ljust(width)}  {t_pure * 1e6:9.1f}u  {'n/a':>10}  {'n/a':>8}")
        else:
            print(
                f"{name.ljust(width)}  {t_pure * 1e6:9.1f}u  {t_fast * 1e6:9.1f}u"
                f"  {t_pure / t_fast:7.1f}x"
            )
    if _speedups is None:
        print("\ncompiled extension not built; showing the fallback only")


if __name__ == "__main__":
    main()
