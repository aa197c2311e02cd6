#!/usr/bin/env python3
"""Benchmark the compiled core against the pure-numpy fallback.

Two workloads are timed:

* the raw posterior refit (the single hot kernel), and
* complete noisy-release runs, the unit that repetition studies execute
  tens of thousands of times.

Run after `pip install -e .`:

    python benchmarks/bench_backends.py [--runs 2000]
"""

import argparse
import time

import numpy as np

from dpbo import (
    DatasetSimilarity,
    HyperparamGrid,
    KernelParams,
    NoisyRunConfig,
    PrivacyBudget,
    TabulatedObjective,
    compute_bundle,
    draw_gp_values,
    gram_matrix,
    run_noisy,
)
from dpbo import _gpcore_py

try:
    from dpbo import _gpcore
except ImportError:
    _gpcore = None


def bench_posterior(impl, G, idx, values, sigma2, repeats):
    start = time.perf_counter()
    for _ in range(repeats):
        impl.posterior_from_gram(G, idx, values, sigma2, 0.0)
    return (time.perf_counter() - start) / repeats


def bench_runs(runs, grid, params, sigma2):
    budget = PrivacyBudget(1.0, 0.1)
    cfg = NoisyRunConfig(
        grid=grid, kernel=params, T=8, budget=budget, sigma2=sigma2,
        k1=DatasetSimilarity(0.9), seed=0,
    )
    G = gram_matrix(grid.points, params)
    bundle = compute_bundle(cfg, gram=G)
    values = draw_gp_values(grid, params, np.random.default_rng(0))
    mech = np.random.default_rng(1)
    start = time.perf_counter()
    for i in range(runs):
        obj = TabulatedObjective(
            grid, values, noise_sigma=np.sqrt(sigma2), rng=np.random.default_rng(i)
        )
        run_noisy(obj, cfg, rng=mech, gram=G, bundle=bundle)
    return (time.perf_counter() - start) / runs


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--runs", type=int, default=2000)
    parser.add_argument("--grid-size", type=int, default=16)
    parser.add_argument("--train-size", type=int, default=12)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    grid = HyperparamGrid.from_points(rng.uniform(0, 1, size=(args.grid_size, 2)))
    params = KernelParams("se", 0.3)
    sigma2 = 0.5
    G = gram_matrix(grid.points, params)
    idx = np.asarray(rng.integers(0, args.grid_size, size=args.train_size), dtype=np.intp)
    values = rng.standard_normal(args.train_size)

    print(f"grid {args.grid_size} points, {args.train_size} observations")
    print()
    print("posterior refit (per call):")
    t_pure = bench_posterior(_gpcore_py, G, idx, values, sigma2, 3000)
    print(f"  pure numpy : {t_pure * 1e6:9.1f} us")
    if _gpcore is not None:
        t_fast = bench_posterior(_gpcore, G, idx, values, sigma2, 3000)
        print(f"  compiled   : {t_fast * 1e6:9.1f} us   ({t_pure / t_fast:5.1f}x)")
    else:
        print("  compiled   : not built")

    print()
    print(f"full noisy release (per run, T=8, averaged over {args.runs}):")
    import dpbo.backend as backend

    t_run = bench_runs(args.runs, grid, params, sigma2)
    label = "compiled" if backend.USING_COMPILED else "pure numpy"
    print(f"  active backend ({label}): {t_run * 1e6:9.1f} us")
    print()
    print("set DPBO_PURE_PYTHON=1 and rerun to time the full run on the fallback")


if __name__ == "__main__":
    main()
