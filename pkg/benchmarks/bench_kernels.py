#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the two hot kernels (tree split search, kNN neighbor queries), full
model fits built on them, and an end-to-end cross-validated cell. Both
backends produce identical results; this script reports the speed gap.

Usage:
    python benchmarks/bench_kernels.py [--rows 2000] [--features 10] [--repeats 5]
"""

import argparse
import time

import numpy as np

from rankfolio import _kernels
from rankfolio.evaluation import run_cross_validation
from rankfolio.learners import Dataset, LearnerSpec, fit_classifier, fit_regressor
from rankfolio.rankers import LearnerCombo
from rankfolio.scenario import GeneratorSpec, generate_synthetic


def best_of(repeats, fn):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def benchmark(args):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(args.rows, args.features))
    y_codes = rng.integers(0, 8, args.rows)
    y_real = rng.normal(size=args.rows)
    queries = rng.normal(size=(200, args.features))
    labels = tuple(str(v) for v in y_codes)
    clf_data = Dataset(X, labels)
    reg_data = Dataset(X, tuple(float(v) for v in y_real))
    scenario = generate_synthetic(GeneratorSpec(200, 5, args.features, noise=0.1), 42)
    combo = LearnerCombo(classifier="tree", regressor="tree")

    cases = [
        ("split/classification", lambda: _kernels.best_split_classification(X, y_codes, 8, 5)),
        ("split/regression", lambda: _kernels.best_split_regression(X, y_real, 5)),
        ("knn/query k=10", lambda: _kernels.knn_query(X, queries, 10)),
        ("fit/tree classifier", lambda: fit_classifier(LearnerSpec("tree"), clf_data)),
        ("fit/tree regressor", lambda: fit_regressor(LearnerSpec("tree"), reg_data)),
        ("cv/faster-than-class", lambda: run_cross_validation(
            scenario, "faster-than-class", combo, k=5, seed=0)),
    ]

    available = _kernels.available_backends()
    if "compiled" not in available:
        print("compiled backend not built; showing pure timings only")

    results = {}
    for backend in available:
        _kernels.use_backend(backend)
        for name, fn in cases:
            fn()  # warm up
            results[(backend, name)] = best_of(args.repeats, fn)

    width = max(len(name) for name, _ in cases)
    header = f"{'kernel':<{width}}  {'pure':>10}"
    if "compiled" in available:
        header += f"  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, _ in cases:
        pure_t = results[("pure", name)]
        line = f"{name:<{width}}  {pure_t * 1e3:>8.2f}ms"
        if "compiled" in available:
            comp_t = results[("compiled", name)]
            line += f"  {comp_t * 1e3:>8.2f}ms  {pure_t / comp_t:>7.1f}x"
        print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=2000)
    parser.add_argument("--features", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=5)
    benchmark(parser.parse_args())


if __name__ == "__main__":
    main()
