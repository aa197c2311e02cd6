"""Built-in sanity harness behind ``dpbo verify``.

Fast statistical and oracle checks, including negative controls that are
expected to fail their inner test (the check passes when they do).  A
clean bill here means the mechanisms, the posterior math, and the
information-gain bound behave as documented on this installation.
"""

from __future__ import annotations

import math

import numpy as np

from . import gp
from .acquisition import info_gain
from .grid import HyperparamGrid
from .kernels import KernelParams
from .mechanisms import ScoredCandidates, exponential_select, laplace_sample
from .verification import dp_ratio_test, gp_predict_naive, info_gain_exact

__all__ = ["run_selfcheck"]


def _check_laplace_dp(seed):
    # Correctly scaled output perturbation on values at distance 1.
    def sampler(value):
        def draw(rng, n):
            return value + laplace_sample(1.0, rng, size=n)

        return draw

    report = dp_ratio_test(
        sampler(0.0), sampler(1.0), epsilon=1.0, delta=0.0,
        n_samples=100_000, bins=50, rng=np.random.default_rng(seed),
    )
    return {
        "name": "laplace_mechanism_ratio",
        "passed": report.passed,
        "detail": report.to_json(),
    }


def _check_laplace_negative_control(seed):
    # Half the required scale must blow the ratio bound.
    def sampler(value):
        def draw(rng, n):
            return value + laplace_sample(0.5, rng, size=n)

        return draw

    report = dp_ratio_test(
        sampler(0.0), sampler(1.0), epsilon=1.0, delta=0.0,
        n_samples=100_000, bins=50, rng=np.random.default_rng(seed),
    )
    return {
        "name": "underscaled_laplace_fails",
        "passed": not report.passed,
        "detail": report.to_json(),
    }


def _check_gp_oracle(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        n = int(rng.integers(4, 10))
        grid = HyperparamGrid.from_points(rng.uniform(0, 1, size=(n, 2)))
        params = KernelParams("se", 0.5)
        T = int(rng.integers(1, 6))
        obs = gp.ObservationLog(
            rng.integers(0, n, size=T), rng.standard_normal(T), 0.25
        )
        post = gp.fit(grid, params, obs)
        means, variances = gp_predict_naive(grid, params, obs)
        worst = max(
            worst,
            float(np.abs(post.means - means).max()),
            float(np.abs(post.variances - variances).max()),
        )
    return {
        "name": "gp_matches_naive_inversion",
        "passed": worst < 1e-8,
        "detail": f"max deviation {worst:.2e}",
    }


def _check_info_gain_sandwich(seed):
    rng = np.random.default_rng(seed)
    grid = HyperparamGrid.from_points(rng.uniform(0, 1, size=(8, 2)))
    params = KernelParams("se", 0.4)
    exact = info_gain_exact(grid, params, 1.0, 3)
    scaled = info_gain(grid, params, 1.0, 3).gamma_t
    ok = exact <= scaled + 1e-12 and scaled * (1.0 - math.exp(-1.0)) <= exact + 1e-12
    return {
        "name": "info_gain_sandwich",
        "passed": bool(ok),
        "detail": f"exact {exact:.6f}, greedy-scaled {scaled:.6f}",
    }


def _check_exponential_mechanism(seed):
    rng = np.random.default_rng(seed)
    cands = ScoredCandidates(np.array([1.0, 0.0]), sensitivity=1.0, epsilon=2.0)
    n = 100_000
    hits = sum(exponential_select(cands, rng) == 0 for _ in range(n))
    expected = math.e / (math.e + 1.0)
    err = abs(hits / n - expected)
    return {
        "name": "exponential_mechanism_frequency",
        "passed": err <= 0.01,
        "detail": f"|empirical - {expected:.4f}| = {err:.4f} over {n} draws",
    }


def run_selfcheck(seed: int = 0) -> list[dict]:
    """Run every check; a negative control passes by failing its inner test."""
    return [
        _check_laplace_dp(seed),
        _check_laplace_negative_control(seed + 1),
        _check_gp_oracle(seed + 2),
        _check_info_gain_sandwich(seed + 3),
        _check_exponential_mechanism(seed + 4),
    ]
