"""Covariance functions over hyper-parameters and dataset similarity.

Two normalized stationary families are supported (squared exponential and
Matern 5/2); the dataset-similarity value is a plain scalar in [0, 1] that
multiplies the hyper-parameter kernel to form the two-task product kernel.
No functional form is imposed on the similarity: it is data, supplied by
the caller, with a Jaccard estimator offered as a convenience.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import backend

__all__ = [
    "KernelFamily",
    "KernelParams",
    "DatasetSimilarity",
    "k2_eval",
    "gram_matrix",
    "multi_task_kernel",
    "jaccard",
]


class KernelFamily(str, Enum):
    SQUARED_EXPONENTIAL = "se"
    MATERN52 = "matern52"


_BACKEND_CODE = {
    KernelFamily.SQUARED_EXPONENTIAL: backend.SE,
    KernelFamily.MATERN52: backend.MATERN52,
}


@dataclass(frozen=True)
class KernelParams:
    """A kernel family plus its fixed lengthscale."""

    family: KernelFamily = KernelFamily.SQUARED_EXPONENTIAL
    lengthscale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if not (self.lengthscale > 0 and math.isfinite(self.lengthscale)):
            raise ValueError(f"lengthscale must be positive, got {self.lengthscale}")

    @property
    def backend_code(self) -> int:
        return _BACKEND_CODE[self.family]


@dataclass(frozen=True)
class DatasetSimilarity:
    """Similarity between two validation sets; 1 means treated as identical."""

    k1: float

    def __post_init__(self):
        if not (0.0 <= self.k1 <= 1.0):
            raise ValueError(f"dataset similarity must lie in [0, 1], got {self.k1}")


def _as_point(x, name: str) -> np.ndarray:
    p = np.asarray(x, dtype=np.float64)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1 or p.shape[0] < 1:
        raise ValueError(f"{name} must be a 1-d point, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} has non-finite coordinates")
    return p


def k2_eval(a, b, params: KernelParams) -> float:
    """Evaluate the hyper-parameter kernel at a pair of points.

    Squared exponential: exp(-||a-b||^2 / (2 l^2)).
    Matern 5/2: (1 + sqrt(5) r/l + 5 r^2/(3 l^2)) exp(-sqrt(5) r/l).
    """
    pa = _as_point(a, "a")
    pb = _as_point(b, "b")
    if pa.shape != pb.shape:
        raise ValueError(f"dimension mismatch: {pa.shape[0]} vs {pb.shape[0]}")
    ell = params.lengthscale
    r2 = float(np.dot(pa - pb, pa - pb))
    if params.family is KernelFamily.SQUARED_EXPONENTIAL:
        return math.exp(-r2 / (2.0 * ell * ell))
    r = math.sqrt(r2)
    s = math.sqrt(5.0) * r / ell
    return (1.0 + s + 5.0 * r2 / (3.0 * ell * ell)) * math.exp(-s)


def gram_matrix(points, params: KernelParams) -> np.ndarray:
    """Kernel matrix of a point sequence; symmetric with unit diagonal."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError(f"expected a nonempty (n, d) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite coordinates")
    return backend.gram(pts, params.lengthscale, params.backend_code)


def multi_task_kernel(k1: DatasetSimilarity, k2val: float) -> float:
    """Product combination of dataset similarity and hyper-parameter kernel."""
    if not (-1e-12 <= k2val <= 1.0 + 1e-12):
        raise ValueError(f"k2 value out of range [0, 1]: {k2val}")
    return k1.k1 * k2val


def jaccard(records_a, records_b) -> DatasetSimilarity:
    """Convenience similarity estimator |A & B| / |A | B| over hashable records."""
    sa, sb = set(records_a), set(records_b)
    union = sa | sb
    if not union:
        return DatasetSimilarity(1.0)
    return DatasetSimilarity(len(sa & sb) / len(union))
