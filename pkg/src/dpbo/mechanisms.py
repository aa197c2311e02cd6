"""Laplace and exponential mechanisms with explicit, seedable randomness.

Every sampling function takes a numpy Generator; nothing here touches
global random state, so runs replay bit-for-bit from their seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LaplaceScale",
    "ScoredCandidates",
    "laplace_sample",
    "laplace_release",
    "selection_probabilities",
    "exponential_select",
]

# Largest |u| fed to log1p(-2|u|); keeps the inverse CDF finite if the
# generator ever returns an endpoint.
_U_CAP = 0.5 * (1.0 - 1e-16)


@dataclass(frozen=True)
class LaplaceScale:
    """Scale of a zero-location Laplace distribution; 0 is a point mass."""

    b: float

    def __post_init__(self):
        if not (self.b >= 0 and math.isfinite(self.b)):
            raise ValueError(f"Laplace scale must be finite and >= 0, got {self.b}")


@dataclass(frozen=True)
class ScoredCandidates:
    """Candidate scores with the sensitivity and budget of their selection."""

    scores: np.ndarray
    sensitivity: float
    epsilon: float

    def __post_init__(self):
        s = np.ascontiguousarray(self.scores, dtype=np.float64)
        if s.ndim != 1 or s.shape[0] < 1:
            raise ValueError("scores must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        if not (self.sensitivity > 0 and math.isfinite(self.sensitivity)):
            raise ValueError(f"sensitivity must be positive, got {self.sensitivity}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "scores", s)


def laplace_sample(scale, rng: np.random.Generator, size=None):
    """Inverse-CDF Laplace draw(s): -b sign(u) ln(1 - 2|u|), u ~ U(-1/2, 1/2)."""
    b = scale.b if isinstance(scale, LaplaceScale) else float(scale)
    if not (b >= 0 and math.isfinite(b)):
        raise ValueError(f"Laplace scale must be finite and >= 0, got {b}")
    if b == 0.0:
        return 0.0 if size is None else np.zeros(size)
    u = rng.uniform(-0.5, 0.5, size=size)
    au = np.minimum(np.abs(u), _U_CAP)
    out = -b * np.sign(u) * np.log1p(-2.0 * au)
    return float(out) if size is None else out


def laplace_release(
    value: float, sensitivity: float, epsilon: float, rng: np.random.Generator
) -> float:
    """value + Lap(sensitivity / epsilon)."""
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not (sensitivity >= 0 and math.isfinite(sensitivity)):
        raise ValueError(f"sensitivity must be finite and >= 0, got {sensitivity}")
    return float(value) + laplace_sample(sensitivity / epsilon, rng)


def selection_probabilities(cands: ScoredCandidates) -> np.ndarray:
    """Normalized selection distribution exp(eps q / (2 sens)) / Z.

    Max-shifted before exponentiation so arbitrarily large scores cannot
    overflow.
    """
    logits = cands.scores * (cands.epsilon / (2.0 * cands.sensitivity))
    logits = logits - logits.max()
    w = np.exp(logits)
    return w / w.sum()


def exponential_select(cands: ScoredCandidates, rng: np.random.Generator) -> int:
    """Draw a candidate index from the exponential-mechanism distribution."""
    p = selection_probabilities(cands)
    cdf = np.cumsum(p)
    u = rng.random()
    i = int(np.searchsorted(cdf, u, side="right"))
    return min(i, p.shape[0] - 1)
