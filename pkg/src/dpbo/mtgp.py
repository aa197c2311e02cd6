"""Two-task marginal-likelihood sweep over the dataset-similarity value.

Builds paired evaluation matrices (one row per validation set and its
neighbor, one column per hyper-parameter setting), then scores a grid of
candidate similarity values by the joint zero-mean marginal likelihood
with task covariance [[1, k1], [k1, 1]].  Because the validation pairs
are drawn independently, the joint likelihood is the sum of per-pair log
densities, all sharing one covariance per candidate k1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .convex import LabeledDataset, train_erm, validation_score
from .gp import log_marginal_likelihood
from .kernels import KernelParams, gram_matrix
from .sobol import sobol_points
from .synthetic import make_classification

__all__ = [
    "EvalMatrices",
    "LikelihoodCurve",
    "SyntheticMTGPPipeline",
    "ConvexValidationPipeline",
    "build_matrices",
    "likelihood_curve",
    "default_k1_grid",
]

COVARIANCE_JITTER = 1e-6


@dataclass(frozen=True, eq=False)
class EvalMatrices:
    """Scores of s settings on p validation sets and their neighbors."""

    f_v: np.ndarray
    f_vprime: np.ndarray
    hyperparams: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.f_v, dtype=np.float64)
        b = np.asarray(self.f_vprime, dtype=np.float64)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValueError("evaluation matrices must be 2-d and the same shape")
        if np.asarray(self.hyperparams).shape[0] != a.shape[1]:
            raise ValueError("need one hyper-parameter setting per column")
        object.__setattr__(self, "f_v", a)
        object.__setattr__(self, "f_vprime", b)

    @property
    def pairs(self) -> int:
        return self.f_v.shape[0]

    @property
    def settings(self) -> int:
        return self.f_v.shape[1]

    def to_csv(self, path_v, path_vprime) -> None:
        np.savetxt(path_v, self.f_v, delimiter=",")
        np.savetxt(path_vprime, self.f_vprime, delimiter=",")


@dataclass(frozen=True, eq=False)
class LikelihoodCurve:
    k1_values: np.ndarray
    loglik: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k1_values, dtype=np.float64)
        ll = np.asarray(self.loglik, dtype=np.float64)
        if k.shape != ll.shape or k.ndim != 1:
            raise ValueError("k1 grid and log likelihoods must be 1-d, equal length")
        if np.any(np.diff(k) <= 0):
            raise ValueError("k1 grid must be strictly increasing")
        object.__setattr__(self, "k1_values", k)
        object.__setattr__(self, "loglik", ll)

    @property
    def argmax_k1(self) -> float:
        return float(self.k1_values[int(np.argmax(self.loglik))])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k1", "loglik"])
            for k, ll in zip(self.k1_values, self.loglik):
                writer.writerow([repr(float(k)), repr(float(ll))])


def default_k1_grid() -> np.ndarray:
    """0.05 to 0.95 in steps of 0.05."""
    return np.round(np.arange(1, 20) * 0.05, 10)


class SyntheticMTGPPipeline:
    """Pair generator drawing rows jointly from a known two-task prior.

    Ideal for recovery experiments: the generating k1 is known, so the
    likelihood curve's argmax can be checked against the truth.
    """

    def __init__(self, true_k1: float, kernel: KernelParams, dim: int = 2):
        if not 0.0 <= true_k1 <= 1.0:
            raise ValueError("true_k1 must lie in [0, 1]")
        self.true_k1 = float(true_k1)
        self.kernel = kernel
        self.dim = int(dim)
        self._chol = None

    def _cholesky(self, settings: np.ndarray) -> np.ndarray:
        if self._chol is None or self._chol.shape[0] != 2 * settings.shape[0]:
            K2 = gram_matrix(settings, self.kernel)
            task = np.array([[1.0, self.true_k1], [self.true_k1, 1.0]])
            joint = np.kron(task, K2) + COVARIANCE_JITTER * np.eye(2 * K2.shape[0])
            self._chol = np.linalg.cholesky(joint)
        return self._chol

    def evaluate_pair(self, settings: np.ndarray, rng: np.random.Generator):
        s = settings.shape[0]
        draw = self._cholesky(settings) @ rng.standard_normal(2 * s)
        return draw[:s], draw[s:]


class ConvexValidationPipeline:
    """Pair generator backed by real training: s regularized linear models
    scored on sampled validation sets and their one-record-swapped
    neighbors.

    Models depend only on the (nonsensitive) training set and the setting,
    so they are trained once and reused across pairs.
    """

    def __init__(
        self,
        train: LabeledDataset,
        val_size: int = 20,
        lam_range: tuple[float, float] = (0.05, 2.0),
        train_loss: str = "logistic",
        val_loss: str = "ramp",
    ):
        self.train = train
        self.val_size = int(val_size)
        self.lam_range = lam_range
        self.train_loss = train_loss
        self.val_loss = val_loss
        self.dim = 1
        self._models: list | None = None

    def _lam_of_setting(self, u: float) -> float:
        lo, hi = self.lam_range
        return lo * (hi / lo) ** u if hi > lo else lo

    def _fit_models(self, settings: np.ndarray):
        if self._models is None:
            self._models = [
                train_erm(self.train, self._lam_of_setting(float(u[0])), loss=self.train_loss)
                for u in settings
            ]
        return self._models

    def _sample_val(self, rng: np.random.Generator) -> LabeledDataset:
        X, y = make_classification(self.val_size, self.train.dim, rng)
        return LabeledDataset.from_arrays(X, y)

    def evaluate_pair(self, settings: np.ndarray, rng: np.random.Generator):
        models = self._fit_models(settings)
        val = self._sample_val(rng)
        swap_at = int(rng.integers(val.size))
        x_new, y_new = make_classification(1, self.train.dim, rng)
        neighbor = val.with_swapped(swap_at, x_new[0], y_new[0])
        row = np.array([validation_score(m, val, self.val_loss) for m in models])
        row_p = np.array([validation_score(m, neighbor, self.val_loss) for m in models])
        return row, row_p


def build_matrices(pair_count: int, setting_count: int, pipeline, seed) -> EvalMatrices:
    """Evaluate `setting_count` settings on `pair_count` neighboring pairs."""
    if pair_count < 1 or setting_count < 1:
        raise ValueError("pair and setting counts must be >= 1")
    rng = np.random.default_rng(seed)
    settings = sobol_points(pipeline.dim, setting_count)
    f_v = np.empty((pair_count, setting_count))
    f_vp = np.empty((pair_count, setting_count))
    for i in range(pair_count):
        try:
            row, row_p = pipeline.evaluate_pair(settings, rng)
        except Exception as exc:
            raise RuntimeError(f"pipeline failed on pair {i}: {exc}") from exc
        f_v[i], f_vp[i] = row, row_p
    return EvalMatrices(f_v=f_v, f_vprime=f_vp, hyperparams=settings)


def likelihood_curve(
    mats: EvalMatrices,
    kernel: KernelParams,
    k1_grid: np.ndarray | None = None,
    jitter: float = COVARIANCE_JITTER,
) -> LikelihoodCurve:
    """Joint log likelihood of all pairs for each candidate similarity."""
    k1s = default_k1_grid() if k1_grid is None else np.asarray(k1_grid, dtype=np.float64)
    if np.any(k1s <= 0.0) or np.any(k1s >= 1.0):
        raise ValueError("k1 grid values must lie strictly inside (0, 1)")
    K2 = gram_matrix(mats.hyperparams, kernel)
    s = K2.shape[0]
    eye = np.eye(2 * s)
    stacked = np.hstack([mats.f_v, mats.f_vprime])  # (pairs, 2s)
    logliks = np.empty(k1s.shape[0])
    for j, k1 in enumerate(k1s):
        task = np.array([[1.0, k1], [k1, 1.0]])
        joint = np.kron(task, K2) + jitter * eye
        total = 0.0
        for row in stacked:
            total += log_marginal_likelihood(joint, row)
        logliks[j] = total
    return LikelihoodCurve(k1_values=k1s, loglik=logliks)
