"""Independent oracles and statistical testers.

Everything here exists to check the production paths without sharing code
with them: kernels are re-derived from their formulas with scalar math,
the posterior comes from textbook matrix inversion, and the information
gain is an exhaustive subset search.  The statistical testers are sanity
harnesses, not proofs; their thresholds carry explicit slack and the test
suite includes negative controls that must fail.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .gp import NOISE_FREE_JITTER, ObservationLog
from .grid import HyperparamGrid
from .kernels import KernelFamily, KernelParams

__all__ = [
    "gp_predict_naive",
    "info_gain_exact",
    "DPTestReport",
    "dp_ratio_test",
    "UtilityTestReport",
    "utility_frequency_test",
]

DEFAULT_SLACK = 0.15
MIN_DP_SAMPLES = 10_000
MIN_UTILITY_REPS = 1_000


def _k2_scalar(a, b, params: KernelParams) -> float:
    # Independent of dpbo.kernels / the backend on purpose.
    r2 = sum((x - y) ** 2 for x, y in zip(a, b))
    ell = params.lengthscale
    if params.family is KernelFamily.SQUARED_EXPONENTIAL:
        return math.exp(-r2 / (2.0 * ell * ell))
    r = math.sqrt(r2)
    return (1.0 + math.sqrt(5.0) * r / ell + 5.0 * r2 / (3.0 * ell * ell)) * math.exp(
        -math.sqrt(5.0) * r / ell
    )


def _gram_naive(points, params: KernelParams) -> np.ndarray:
    n = len(points)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = _k2_scalar(points[i], points[j], params)
    return K


def gp_predict_naive(
    grid: HyperparamGrid, params: KernelParams, obs: ObservationLog
) -> tuple[np.ndarray, np.ndarray]:
    """Textbook-inversion posterior mean and variance at every grid point."""
    n = grid.size
    if obs.T == 0:
        return np.zeros(n), np.ones(n)
    train = [grid.points[i] for i in obs.indices]
    K = _gram_naive(train, params)
    jitter = NOISE_FREE_JITTER if obs.noise_variance == 0.0 else 0.0
    A = K + (obs.noise_variance + jitter) * np.eye(obs.T)
    A_inv = np.linalg.inv(A)
    means = np.empty(n)
    variances = np.empty(n)
    for g in range(n):
        kvec = np.array([_k2_scalar(grid.points[g], p, params) for p in train])
        means[g] = kvec @ A_inv @ obs.values
        variances[g] = max(0.0, 1.0 - kvec @ A_inv @ kvec)
    return means, variances


def info_gain_exact(
    grid: HyperparamGrid, params: KernelParams, sigma2: float, T: int
) -> float:
    """Exhaustive max over size-T subsets of 0.5 log det(I + K_A / sigma2)."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if grid.size > 12 or T > 6:
        raise ValueError(
            f"instance too large for enumeration (|grid|={grid.size}, T={T}); "
            "limits are 12 points and 6 steps"
        )
    if T < 1 or T > grid.size:
        raise ValueError("need 1 <= T <= grid size")
    K = _gram_naive(list(grid.points), params)
    best = -math.inf
    eye = np.eye(T)
    for subset in itertools.combinations(range(grid.size), T):
        sub = K[np.ix_(subset, subset)]
        sign, logdet = np.linalg.slogdet(eye + sub / sigma2)
        if sign <= 0:
            continue
        best = max(best, 0.5 * float(logdet))
    return best


@dataclass(frozen=True)
class DPTestReport:
    """Outcome of a histogram ratio test against the privacy definition."""

    epsilon_claimed: float
    delta_claimed: float
    bins: str
    max_ratio_observed: float
    threshold: float
    passed: bool
    sample_count: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "epsilon_claimed": self.epsilon_claimed,
                "delta_claimed": self.delta_claimed,
                "bins": self.bins,
                "max_ratio_observed": self.max_ratio_observed,
                "threshold": self.threshold,
                "passed": self.passed,
                "sample_count": self.sample_count,
            },
            sort_keys=True,
        )


def _histogram_pair(a, b, bins):
    if bins == "discrete":
        values = np.unique(np.concatenate([a, b]))
        edges = np.concatenate([values - 0.5, [values[-1] + 0.5]])
        desc = f"discrete ({values.size} values)"
    else:
        # Equal-mass bins on the pooled sample: equal-width bins leave the
        # tails nearly empty and the ratio estimate there is pure noise.
        pooled = np.concatenate([a, b])
        edges = np.unique(np.quantile(pooled, np.linspace(0.0, 1.0, int(bins) + 1)))
        if edges.size < 2:
            edges = np.array([edges[0] - 0.5, edges[0] + 0.5])
        desc = f"{edges.size - 1} equal-mass bins on [{edges[0]:.4g}, {edges[-1]:.4g}]"
    ca, _ = np.histogram(a, bins=edges)
    cb, _ = np.histogram(b, bins=edges)
    return ca, cb, desc


def dp_ratio_test(
    sample_v,
    sample_vprime,
    epsilon: float,
    delta: float,
    n_samples: int = 100_000,
    bins="discrete",
    slack: float = DEFAULT_SLACK,
    rng: np.random.Generator | None = None,
) -> DPTestReport:
    """Empirical check of the output-ratio privacy bound.

    `sample_v(rng, n)` and `sample_vprime(rng, n)` draw n outputs of the
    mechanism on two neighboring inputs.  Bins empty on both sides are
    excluded; the delta mass is subtracted from the numerator and 1/n is
    added to the denominator so finite sampling cannot divide by zero.
    The check runs in both directions.
    """
    if n_samples < MIN_DP_SAMPLES:
        raise ValueError(f"need at least {MIN_DP_SAMPLES} samples, got {n_samples}")
    if rng is None:
        rng = np.random.default_rng(0)
    a = np.asarray(sample_v(rng, n_samples), dtype=np.float64)
    b = np.asarray(sample_vprime(rng, n_samples), dtype=np.float64)
    if a.shape != (n_samples,) or b.shape != (n_samples,):
        raise ValueError("samplers must return exactly n_samples draws")
    ca, cb, desc = _histogram_pair(a, b, bins)
    occupied = (ca + cb) > 0
    pa = ca[occupied] / n_samples
    pb = cb[occupied] / n_samples
    smooth = 1.0 / n_samples
    forward = np.clip(pa - delta, 0.0, None) / (pb + smooth)
    backward = np.clip(pb - delta, 0.0, None) / (pa + smooth)
    max_ratio = float(max(forward.max(), backward.max()))
    threshold = math.exp(epsilon) * (1.0 + slack)
    return DPTestReport(
        epsilon_claimed=epsilon,
        delta_claimed=delta,
        bins=desc,
        max_ratio_observed=max_ratio,
        threshold=threshold,
        passed=max_ratio <= threshold,
        sample_count=n_samples,
    )


@dataclass(frozen=True)
class UtilityTestReport:
    passed: bool
    fraction: float
    bound: float
    target_prob: float
    sample_count: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "passed": self.passed,
                "fraction": self.fraction,
                "bound": self.bound,
                "target_prob": self.target_prob,
                "sample_count": self.sample_count,
            },
            sort_keys=True,
        )


def utility_frequency_test(
    gaps, bound: float, target_prob: float, slack: float = 0.03
) -> UtilityTestReport:
    """Check that realized gaps stay within a bound often enough.

    `gaps` are the per-repetition realized quantities (already computed by
    seeded executions); passes when the within-bound fraction reaches
    target_prob - slack (binomial slack).
    """
    g = np.asarray(gaps, dtype=np.float64)
    if g.ndim != 1 or g.shape[0] < MIN_UTILITY_REPS:
        raise ValueError(f"need at least {MIN_UTILITY_REPS} repetitions, got {g.shape}")
    fraction = float(np.mean(g <= bound))
    return UtilityTestReport(
        passed=fraction >= target_prob - slack,
        fraction=fraction,
        bound=float(bound),
        target_prob=float(target_prob),
        sample_count=g.shape[0],
    )
