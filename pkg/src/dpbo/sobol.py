"""Sobol low-discrepancy points on the unit cube.

Thin wrapper over scipy's generator with the index-0 point (the all-zeros
corner) skipped, so the first returned point is (0.5, ..., 0.5).
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import qmc

__all__ = ["sobol_points"]


def sobol_points(d: int, count: int) -> np.ndarray:
    """First `count` Sobol points in [0, 1]^d, index 0 skipped. Deterministic."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if count < 1:
        raise ValueError("count must be >= 1")
    try:
        engine = qmc.Sobol(d=d, scramble=False)
    except ValueError as exc:  # dimension beyond the direction-number table
        raise ValueError(f"unsupported Sobol dimension {d}: {exc}") from exc
    engine.fast_forward(1)
    with warnings.catch_warnings():
        # scipy warns when count is not a power of two; balance is not
        # required here, only determinism and low discrepancy.
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(count)
