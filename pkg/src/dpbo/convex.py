"""Regularized convex training and Lipschitz validation scoring.

Training minimizes (lam/2)||w||^2 + mean loss with a 1-Lipschitz convex
loss; validation negates the mean of a bounded Lipschitz loss.  The
stability bound quantifies how much the validation score can move when
the regularization changes and one validation record is swapped, which is
what calibrates the noise of the distribution-free release path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabeledDataset",
    "ModelWeights",
    "ConvergenceError",
    "train_erm",
    "validation_score",
    "loss_constants",
    "stability_bound",
]

HUBER_WIDTH = 1e-3

VALIDATION_LOSSES = ("ramp", "sigmoid")

# (Lipschitz constant in w, maximum loss value) for each validation loss;
# both rely on features scaled into the unit ball.
_LOSS_CONSTANTS = {"ramp": (1.0, 1.0), "sigmoid": (0.25, 1.0)}


class ConvergenceError(RuntimeError):
    """Gradient descent failed to reach tolerance within the iteration cap."""


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature rows inside the unit ball with labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.ascontiguousarray(self.labels, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError(f"features must be a nonempty (n, d) array, got {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must be 1-d with one entry per row")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        norms = np.linalg.norm(X, axis=1)
        if norms.max() > 1.0 + 1e-9:
            raise ValueError(
                "feature norms exceed 1; ingest through from_arrays(rescale=True)"
            )
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @classmethod
    def from_arrays(cls, features, labels, rescale: bool = True) -> "LabeledDataset":
        """Build a dataset, scaling all rows by the max norm when above 1."""
        X = np.asarray(features, dtype=np.float64)
        if rescale and X.size:
            top = np.linalg.norm(np.atleast_2d(X), axis=1).max()
            if top > 1.0:
                X = X / top
        return cls(X, np.asarray(labels, dtype=np.float64))

    def with_swapped(self, index: int, x_new, y_new) -> "LabeledDataset":
        """Neighboring dataset: one record replaced."""
        X = self.features.copy()
        y = self.labels.copy()
        X[index] = np.asarray(x_new, dtype=np.float64)
        y[index] = float(y_new)
        return LabeledDataset(X, y)


@dataclass(frozen=True, eq=False)
class ModelWeights:
    w: np.ndarray
    lam: float


def _logistic_value_grad(w, X, y):
    margins = y * (X @ w)
    # log(1 + exp(-m)) evaluated stably on both tails
    value = np.logaddexp(0.0, -margins).mean()
    sig = 1.0 / (1.0 + np.exp(margins))
    grad = -(X.T @ (y * sig)) / X.shape[0]
    return value, grad


def _huber_hinge_value_grad(w, X, y, h=HUBER_WIDTH):
    margins = y * (X @ w)
    value = np.where(
        margins >= 1.0,
        0.0,
        np.where(margins <= 1.0 - h, 1.0 - margins - h / 2.0, (1.0 - margins) ** 2 / (2.0 * h)),
    ).mean()
    slope = np.where(
        margins >= 1.0, 0.0, np.where(margins <= 1.0 - h, -1.0, -(1.0 - margins) / h)
    )
    grad = (X.T @ (slope * y)) / X.shape[0]
    return value, grad


def _hinge_subgradient(w, X, y):
    margins = y * (X @ w)
    value = np.maximum(0.0, 1.0 - margins).mean()
    slope = np.where(margins < 1.0, -1.0, 0.0)
    grad = (X.T @ (slope * y)) / X.shape[0]
    return value, grad


_TRAIN_LOSSES = {
    "logistic": _logistic_value_grad,
    "hinge_smooth": _huber_hinge_value_grad,
}


def train_erm(
    data: LabeledDataset,
    lam: float,
    loss: str = "logistic",
    tol: float = 1e-8,
    max_iter: int = 200_000,
) -> ModelWeights:
    """Minimize the regularized objective by gradient descent with backtracking.

    Strong convexity makes the minimizer unique, so the optimizer only
    affects runtime; the returned weights satisfy ||grad|| <= tol.  The
    exact (nonsmooth) hinge is available as loss="hinge" with decaying
    subgradient steps and no gradient-norm guarantee.
    """
    if lam <= 0:
        raise ValueError("regularization must be positive")
    X, y = data.features, data.labels

    if loss == "hinge":
        return _train_hinge_subgradient(X, y, lam, max_iter)
    try:
        value_grad = _TRAIN_LOSSES[loss]
    except KeyError:
        raise ValueError(f"unknown training loss {loss!r}") from None

    def objective(w):
        val, grad = value_grad(w, X, y)
        return val + 0.5 * lam * float(w @ w), grad + lam * w

    w = np.zeros(data.dim)
    f, g = objective(w)
    step = 1.0
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        gnorm2 = float(g @ g)
        if math.sqrt(gnorm2) <= tol:
            return ModelWeights(w=w, lam=float(lam))
        step = min(step * 2.0, 1e8)
        while True:
            w_new = w - step * g
            f_new, g_new = objective(w_new)
            # trust the sufficient-decrease comparison only while the decrease
            # it demands is resolvable in float; below that, noise-level f
            # comparisons would accept wildly overshooting steps
            wanted = 0.5 * step * gnorm2
            if wanted >= 64.0 * eps * abs(f) and f_new <= f - wanted:
                break
            # endgame criterion: gradient-norm contraction at the rate strong
            # convexity guarantees for an in-range step; stays resolvable long
            # after f has flattened out, and scales with step so the slow
            # directions of ill-conditioned losses are not rejected
            if float(g_new @ g_new) <= (1.0 - min(0.9, 0.5 * step * lam)) * gnorm2:
                break
            if step < 1e-18:
                break
            step *= 0.5
        w, f, g = w_new, f_new, g_new
    raise ConvergenceError(
        f"gradient norm {math.sqrt(float(g @ g)):.3e} above tolerance {tol:g} "
        f"after {max_iter} iterations"
    )


def _train_hinge_subgradient(X, y, lam, max_iter):
    # Averaged subgradient descent with the standard 1/(lam t) steps.
    w = np.zeros(X.shape[1])
    avg = np.zeros_like(w)
    steps = min(max_iter, 20_000)
    for t in range(1, steps + 1):
        _, g = _hinge_subgradient(w, X, y)
        w -= (g + lam * w) / (lam * t)
        avg += (w - avg) / t
    return ModelWeights(w=avg, lam=float(lam))


def loss_constants(g: str) -> tuple[float, float]:
    """(L, g*) of a validation loss: its Lipschitz constant and maximum."""
    try:
        return _LOSS_CONSTANTS[g]
    except KeyError:
        raise ValueError(f"unknown validation loss {g!r}") from None


def validation_score(w, val: LabeledDataset, g: str = "ramp") -> float:
    """Negated mean validation loss of a model on a labeled set.

    ramp:    clamp(1 - y w.x, 0, 1)
    sigmoid: 1 / (1 + exp(y w.x))
    """
    weights = w.w if isinstance(w, ModelWeights) else np.asarray(w, dtype=np.float64)
    if weights.shape != (val.dim,):
        raise ValueError(
            f"weight dimension {weights.shape} does not match data dimension {val.dim}"
        )
    margins = val.labels * (val.features @ weights)
    if g == "ramp":
        losses = np.clip(1.0 - margins, 0.0, 1.0)
    elif g == "sigmoid":
        losses = 1.0 / (1.0 + np.exp(margins))
    else:
        raise ValueError(f"unknown validation loss {g!r}")
    return float(-losses.mean())


def stability_bound(
    lam: float, lam_prime: float, L: float, g_star: float, m: int, lam_min: float
) -> float:
    """Worst-case validation-score change over a regularization change plus
    one swapped validation record:

        (lam' - lam) L / (lam' lam) + min(g*/m, L / (m lam_min))
    """
    lo, hi = min(lam, lam_prime), max(lam, lam_prime)
    if lo <= 0 or lam_min <= 0:
        raise ValueError("regularization values must be positive")
    if m < 1:
        raise ValueError("validation size must be >= 1")
    return (hi - lo) * L / (hi * lo) + min(g_star / m, L / (m * lam_min))
