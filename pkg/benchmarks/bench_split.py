#!/usr/bin/env python3
"""Benchmark the compiled split kernel against the numpy fallback.

Times the raw best-split scans at several node sizes and one full forest
fit per backend, and verifies that both backends return bit-identical
results while timing. Run from the repo root:

    python3 benchmarks/bench_split.py [--trees 100] [--rows 2500]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from eduvuln.models import _kernel, _split_np
from eduvuln.models.forest import ForestConfig, fit_forest

try:
    from eduvuln.models import _split_cy
except ImportError:
    _split_cy = None


def time_scan(fn, values, targets, min_leaf, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(values, targets, min_leaf)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_kernels(rows: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'scan':<14}{'n':>8}{'numpy':>12}{'cython':>12}{'speedup':>9}")
    for n in (200, 1000, rows, 4 * rows):
        values = np.sort(rng.uniform(0.0, 100.0, n))
        targets = rng.standard_normal(n)
        labels = rng.integers(0, 2, n).astype(np.float64)
        repeats = max(3, 20_000 // n)
        for name, fn_np, fn_cy, data in (
            ("regression", _split_np.best_split_regression,
             _split_cy.best_split_regression if _split_cy else None, targets),
            ("gini", _split_np.best_split_classification,
             _split_cy.best_split_classification if _split_cy else None, labels),
        ):
            t_np, out_np = time_scan(fn_np, values, data, 2, repeats)
            if fn_cy is None:
                print(f"{name:<14}{n:>8}{t_np * 1e6:>10.1f}us{'n/a':>12}{'':>9}")
                continue
            t_cy, out_cy = time_scan(fn_cy, values, data, 2, repeats)
            assert out_np == out_cy, f"backend mismatch at n={n}: {out_np} vs {out_cy}"
            print(f"{name:<14}{n:>8}{t_np * 1e6:>10.1f}us{t_cy * 1e6:>10.1f}us"
                  f"{t_np / t_cy:>8.1f}x")


def bench_forest(rows: int, trees: int) -> None:
    rng = np.random.default_rng(1)
    X = rng.uniform(0.0, 100.0, (rows, 5))
    y = 2.0 * X[:, 0] - 0.7 * X[:, 2] + rng.standard_normal(rows) * 10.0
    config = ForestConfig(n_trees=trees)

    results = {}
    backends = [("python", _split_np)]
    if _split_cy is not None:
        backends.append(("cython", _split_cy))
    saved = (_kernel.best_split_regression, _kernel.best_split_classification)
    try:
        for name, impl in backends:
            _kernel.best_split_regression = impl.best_split_regression
            _kernel.best_split_classification = impl.best_split_classification
            t0 = time.perf_counter()
            model = fit_forest(X, y, "regression", 3, config, seed=7)
            results[name] = (time.perf_counter() - t0, model.to_dict())
    finally:
        (_kernel.best_split_regression, _kernel.best_split_classification) = saved

    print(f"\nfull forest fit ({trees} trees, {rows} rows, depth 3):")
    for name, (elapsed, _) in results.items():
        print(f"  {name:<8}{elapsed:.3f}s")
    if len(results) == 2:
        same = results["python"][1] == results["cython"][1]
        print(f"  models identical across backends: {same}")
        assert same


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=2500)
    parser.add_argument("--trees", type=int, default=100)
    args = parser.parse_args()
    if _split_cy is None:
        print("compiled kernel unavailable; showing fallback timings only\n")
    bench_kernels(args.rows)
    bench_forest(args.rows, args.trees)


if __name__ == "__main__":
    main()
