"""Synthetic objectives and datasets for experiments and diagnostics.

Objectives are drawn from the same prior the optimizer assumes, either
singly or as a correlated pair standing in for two neighboring validation
sets with a known similarity.
"""

from __future__ import annotations

import numpy as np

from .grid import HyperparamGrid
from .kernels import KernelParams, gram_matrix

__all__ = [
    "draw_gp_values",
    "draw_paired_gp_values",
    "TabulatedObjective",
    "make_classification",
]

_DRAW_JITTER = 1e-10


def draw_gp_values(
    grid: HyperparamGrid,
    params: KernelParams,
    rng: np.random.Generator,
    gram: np.ndarray | None = None,
) -> np.ndarray:
    """One function sampled from the zero-mean prior, tabulated on the grid."""
    G = gram if gram is not None else gram_matrix(grid.points, params)
    L = np.linalg.cholesky(G + _DRAW_JITTER * np.eye(G.shape[0]))
    return L @ rng.standard_normal(G.shape[0])


def draw_paired_gp_values(
    grid: HyperparamGrid,
    params: KernelParams,
    k1: float,
    rng: np.random.Generator,
    gram: np.ndarray | None = None,
    jitter: float = _DRAW_JITTER,
) -> tuple[np.ndarray, np.ndarray]:
    """A correlated pair of functions from the two-task product prior.

    The pair models the objective on a validation set and on a neighbor,
    with task covariance [[1, k1], [k1, 1]].
    """
    if not 0.0 <= k1 <= 1.0:
        raise ValueError(f"k1 must lie in [0, 1], got {k1}")
    G = gram if gram is not None else gram_matrix(grid.points, params)
    n = G.shape[0]
    joint = np.kron(np.array([[1.0, k1], [k1, 1.0]]), G) + jitter * np.eye(2 * n)
    L = np.linalg.cholesky(joint)
    draw = L @ rng.standard_normal(2 * n)
    return draw[:n], draw[n:]


class TabulatedObjective:
    """Black-box objective backed by a table of grid values.

    Called with a grid point (the exact row array the optimizer hands out);
    adds fresh Gaussian observation noise from its own generator when
    `noise_sigma` is positive.
    """

    def __init__(
        self,
        grid: HyperparamGrid,
        values,
        noise_sigma: float = 0.0,
        rng: np.random.Generator | None = None,
    ):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.size,):
            raise ValueError(
                f"need one value per grid point, got {values.shape} for grid size {grid.size}"
            )
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if noise_sigma > 0 and rng is None:
            raise ValueError("a generator is required for noisy observations")
        self.values = values
        self.noise_sigma = float(noise_sigma)
        self.rng = rng
        self._index = {grid.points[i].tobytes(): i for i in range(grid.size)}

    def index_of(self, lam: np.ndarray) -> int:
        key = np.ascontiguousarray(lam, dtype=np.float64).tobytes()
        try:
            return self._index[key]
        except KeyError:
            raise ValueError("point is not on the objective's grid") from None

    def __call__(self, lam: np.ndarray) -> float:
        v = self.values[self.index_of(lam)]
        if self.noise_sigma > 0.0:
            v += self.noise_sigma * self.rng.standard_normal()
        return float(v)

    @property
    def best_value(self) -> float:
        return float(self.values.max())

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.values))


def make_classification(
    n: int, d: int, rng: np.random.Generator, flip: float = 0.1
) -> tuple[np.ndarray, np.ndarray]:
    """Linearly separable-ish labels from a random teacher, with label flips.

    Features are scaled into the unit ball, as the training contract
    requires.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    X = rng.standard_normal((n, d))
    norms = np.linalg.norm(X, axis=1)
    X /= np.maximum(norms.max(), 1.0)
    teacher = rng.standard_normal(d)
    y = np.where(X @ teacher >= 0, 1.0, -1.0)
    flips = rng.random(n) < flip
    y[flips] *= -1.0
    return X, y
