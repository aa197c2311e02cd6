"""UCB candidate selection, the confidence-width schedule, and an
empirical upper bound on the maximum information gain.

The information-gain bound is computed, not looked up: greedy log-det
selection is within a (1 - 1/e) factor of the subset optimum, so the
greedy total inflated by 1/(1 - 1/e) upper-bounds the true maximum.
An exact brute-force path exists for tiny instances to validate this.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import backend
from .gp import GPPosterior
from .grid import HyperparamGrid
from .kernels import KernelParams, gram_matrix

__all__ = [
    "BetaSchedule",
    "InfoGainMethod",
    "InfoGainBound",
    "beta",
    "ucb_select",
    "info_gain",
]

logger = logging.getLogger(__name__)

_GREEDY_INFLATION = 1.0 / (1.0 - math.exp(-1.0))


@dataclass(frozen=True)
class BetaSchedule:
    """Inputs of the confidence-width sequence 2 log(|grid| t^2 pi^2 / (3 delta)).

    delta below 1 is the meaningful privacy regime (run configs enforce it);
    the schedule itself only needs delta > 0, and clamps the width at 0 when
    a degenerate combination drives the log argument to 1 or below.
    """

    grid_size: int
    delta: float

    def __post_init__(self):
        if self.grid_size < 1:
            raise ValueError("grid_size must be >= 1")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta}")


def beta(t: int, schedule: BetaSchedule) -> float:
    """Confidence width at step t; clamped at 0 outside the sensible regime."""
    if t < 1:
        raise ValueError("t must be >= 1")
    arg = schedule.grid_size * t * t * math.pi**2 / (3.0 * schedule.delta)
    if arg <= 1.0:
        logger.warning(
            "beta schedule argument %.3g <= 1 (grid=%d, t=%d, delta=%g); clamping to 0",
            arg,
            schedule.grid_size,
            t,
            schedule.delta,
        )
        return 0.0
    return 2.0 * math.log(arg)


def ucb_select(post: GPPosterior, beta_value: float, grid: HyperparamGrid | None = None) -> int:
    """Grid index maximizing mean + sqrt(beta) * std; ties break low."""
    if beta_value < 0:
        raise ValueError("beta must be >= 0")
    if post.grid_size == 0:
        raise ValueError("empty grid")
    return int(backend.ucb_argmax(post.means, post.variances, beta_value))


class InfoGainMethod(str, Enum):
    GREEDY_SCALED = "greedy-scaled"
    EXACT_BRUTE_FORCE = "exact"


@dataclass(frozen=True)
class InfoGainBound:
    gamma_t: float
    method: InfoGainMethod

    def __post_init__(self):
        if self.gamma_t < 0:
            raise ValueError("information gain bound must be >= 0")


def greedy_info_gain(
    grid: HyperparamGrid,
    params: KernelParams,
    sigma2: float,
    T: int,
    gram: np.ndarray | None = None,
) -> tuple[float, list[float]]:
    """Greedy T-step information gain and the per-step marginal gains.

    Each step adds the point of largest posterior variance; the chain rule
    for determinants makes the total equal to the log-det gain of the
    selected set.  Selection is without replacement while unselected points
    remain; if T exceeds the grid size the remaining steps may revisit.
    """
    G = gram if gram is not None else gram_matrix(grid.points, params)
    n = G.shape[0]
    selected: list[int] = []
    gains: list[float] = []
    total = 0.0
    for t in range(T):
        if selected:
            idx = np.asarray(selected, dtype=np.intp)
            _, var, _, _ = backend.posterior_from_gram(
                G, idx, np.zeros(len(selected)), sigma2, 0.0
            )
            var = np.clip(var, 0.0, None)
        else:
            var = np.ones(n)
        if t < n:
            mask = np.ones(n, dtype=bool)
            mask[selected] = False
            candidates = np.flatnonzero(mask)
        else:
            candidates = np.arange(n)
        pick = int(candidates[np.argmax(var[candidates])])
        gain = 0.5 * math.log1p(var[pick] / sigma2)
        selected.append(pick)
        gains.append(gain)
        total += gain
    return total, gains


def info_gain(
    grid: HyperparamGrid,
    params: KernelParams,
    sigma2: float,
    T: int,
    method: InfoGainMethod | str = InfoGainMethod.GREEDY_SCALED,
    gram: np.ndarray | None = None,
) -> InfoGainBound:
    """Upper bound on the T-step maximum information gain.

    Requires sigma2 > 0: the gain diverges in the noise-free limit, where
    the dedicated noise-free release path must be used instead.
    """
    if sigma2 <= 0:
        raise ValueError(
            "information gain diverges as the noise variance approaches 0; "
            "use the noise-free release path"
        )
    if T < 1:
        raise ValueError("T must be >= 1")
    method = InfoGainMethod(method)
    if method is InfoGainMethod.EXACT_BRUTE_FORCE:
        from .verification import info_gain_exact

        return InfoGainBound(info_gain_exact(grid, params, sigma2, T), method)
    total, _ = greedy_info_gain(grid, params, sigma2, T, gram=gram)
    return InfoGainBound(total * _GREEDY_INFLATION, method)
