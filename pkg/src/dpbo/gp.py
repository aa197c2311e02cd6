"""Gaussian-process posterior inference on a finite grid.

Fitting factorizes the observed covariance block once (Cholesky) and
evaluates the closed-form posterior mean and variance at every grid point.
Refits are full recomputations: at the T <= few-hundred scale this library
targets, exactness and simplicity beat incremental updates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .grid import HyperparamGrid
from .kernels import KernelParams, gram_matrix

__all__ = [
    "ObservationLog",
    "GPPosterior",
    "SingularModelError",
    "fit",
    "predict",
    "log_marginal_likelihood",
    "NOISE_FREE_JITTER",
]

logger = logging.getLogger(__name__)

# Diagonal jitter applied only when the observation noise is exactly zero,
# keeping the noise-free Cholesky well posed.
NOISE_FREE_JITTER = 1e-10

_NEGATIVE_VARIANCE_TOL = -1e-8


class SingularModelError(RuntimeError):
    """Observed covariance block is not positive definite even with jitter."""


@dataclass(frozen=True)
class ObservationLog:
    """Grid indices sampled so far, their observed values, and the noise level."""

    indices: np.ndarray
    values: np.ndarray
    noise_variance: float

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.intp)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or vals.ndim != 1 or idx.shape[0] != vals.shape[0]:
            raise ValueError("indices and values must be 1-d and the same length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("observed values must be finite")
        if not (self.noise_variance >= 0 and math.isfinite(self.noise_variance)):
            raise ValueError(f"noise variance must be >= 0, got {self.noise_variance}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @property
    def T(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True, eq=False)
class GPPosterior:
    """Factored posterior state with mean/variance cached at every grid point."""

    train_indices: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    grid_cross: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    noise_variance: float
    grid_size: int = field(default=0)

    @property
    def T(self) -> int:
        return self.train_indices.shape[0]


def fit(
    grid: HyperparamGrid,
    params: KernelParams,
    obs: ObservationLog,
    gram: np.ndarray | None = None,
) -> GPPosterior:
    """Fit the posterior for a set of grid observations.

    `gram` may carry a precomputed kernel matrix for the grid (repetition
    studies reuse it across thousands of fits); it is trusted to match
    `grid` and `params`.
    """
    G = gram if gram is not None else gram_matrix(grid.points, params)
    n = G.shape[0]
    idx = obs.indices
    if idx.shape[0] and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("observation index out of grid range")
    sigma2 = obs.noise_variance
    jitter = NOISE_FREE_JITTER if sigma2 == 0.0 else 0.0
    if sigma2 == 0.0 and np.unique(idx).shape[0] != idx.shape[0]:
        raise ValueError("duplicate noise-free observations make the model singular")

    try:
        mu, var, chol, alpha = backend.posterior_from_gram(
            G, idx, obs.values, sigma2, jitter
        )
    except np.linalg.LinAlgError as exc:
        raise SingularModelError(str(exc)) from exc

    raw_min = float(var.min()) if var.size else 0.0
    if raw_min < _NEGATIVE_VARIANCE_TOL:
        logger.warning(
            "posterior variance clamped to 0 (most negative raw value %.3e)", raw_min
        )
    np.clip(var, 0.0, None, out=var)

    return GPPosterior(
        train_indices=idx,
        chol=chol,
        alpha=alpha,
        grid_cross=G[:, idx] if idx.shape[0] else np.zeros((n, 0)),
        means=mu,
        variances=var,
        noise_variance=sigma2,
        grid_size=n,
    )


def predict(post: GPPosterior, grid_index: int) -> tuple[float, float]:
    """Posterior (mean, variance) at one grid point."""
    if not 0 <= grid_index < post.grid_size:
        raise IndexError(f"grid index {grid_index} out of range [0, {post.grid_size})")
    return float(post.means[grid_index]), float(post.variances[grid_index])


def log_marginal_likelihood(joint_cov: np.ndarray, values: np.ndarray) -> float:
    """log N(values; 0, joint_cov) via Cholesky.

    The caller supplies any jitter; a factorization failure here means the
    matrix is not positive definite beyond that jitter.
    """
    cov = np.asarray(joint_cov, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64).ravel()
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] != v.shape[0]:
        raise ValueError(
            f"covariance shape {cov.shape} does not match value length {v.shape[0]}"
        )
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite") from exc
    half = np.linalg.solve(L, v)
    n = v.shape[0]
    return float(
        -0.5 * np.dot(half, half)
        - np.sum(np.log(np.diag(L)))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
