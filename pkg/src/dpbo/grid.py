"""Finite, indexed candidate sets of hyper-parameter points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["HyperparamGrid"]


@dataclass(frozen=True, eq=False)
class HyperparamGrid:
    """An (n, d) array of candidate points, addressed by integer index."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"grid must be a nonempty (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points contain non-finite coordinates")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def point(self, index: int) -> np.ndarray:
        if not 0 <= index < self.size:
            raise IndexError(f"grid index {index} out of range [0, {self.size})")
        return self.points[index]

    @classmethod
    def from_points(cls, points) -> "HyperparamGrid":
        return cls(np.asarray(points, dtype=np.float64))

    @classmethod
    def linspace(cls, low: float, high: float, count: int) -> "HyperparamGrid":
        """Evenly spaced 1-d grid, useful for regularization sweeps."""
        if count < 1:
            raise ValueError("count must be >= 1")
        if high < low:
            raise ValueError("high must be >= low")
        return cls(np.linspace(low, high, count)[:, None])

    @classmethod
    def sobol_box(cls, count: int, low, high) -> "HyperparamGrid":
        """Low-discrepancy grid filling the box [low, high]^d."""
        from .sobol import sobol_points

        lo = np.atleast_1d(np.asarray(low, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(high, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("low and high must be 1-d and the same length")
        if np.any(hi < lo):
            raise ValueError("box upper corner below lower corner")
        unit = sobol_points(lo.shape[0], count)
        return cls(lo + unit * (hi - lo))
