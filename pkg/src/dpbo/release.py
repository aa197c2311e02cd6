"""End-to-end private releases: run the optimization loop, derive every
sensitivity constant, perturb, and report.

Three paths are provided:

* noisy observations: exponential-mechanism hyper-parameter release plus a
  Laplace release of the best observed value, (2 eps, 2 delta) combined;
* exact observations: Laplace release of the best value found from step 2
  on, with the noise scale driven by caller-supplied regret constants A
  and tau rather than an information-gain bound (which diverges without
  observation noise);
* Lipschitz-and-convex training pipelines: Laplace release of the best
  validation score calibrated by the stability bound, pure eps-DP, with no
  distributional assumption on the objective.

Each run returns a ReleaseRecord carrying the private outputs, every
constant that sets a noise scale, the budget accounting, and the
theoretical utility bounds, so a released number can be re-derived by hand
from its record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf

from . import gp
from .acquisition import BetaSchedule, InfoGainBound, beta, info_gain
from .convex import LabeledDataset, loss_constants, train_erm, validation_score
from .grid import HyperparamGrid
from .kernels import DatasetSimilarity, KernelParams, gram_matrix
from .mechanisms import ScoredCandidates, exponential_select, laplace_sample

__all__ = [
    "PrivacyBudget",
    "NoisyRunConfig",
    "SensitivityBundle",
    "BOTrace",
    "ReleaseRecord",
    "ObjectiveError",
    "compute_bundle",
    "noisy_trace",
    "run_noisy",
    "run_exact",
    "run_lipschitz",
    "utility_bounds",
    "bounds_from_constants",
    "compose_budget",
]

# Exploration confidence used by the UCB schedule inside the noise-free
# loops; it tunes the search only and never enters a privacy guarantee.
_LOOP_EXPLORATION_DELTA = 0.1


class ObjectiveError(RuntimeError):
    """Objective evaluation failed mid-run; partial observations attached."""

    def __init__(self, message, indices, values):
        super().__init__(message)
        self.partial_indices = np.asarray(indices, dtype=np.intp)
        self.partial_values = np.asarray(values, dtype=np.float64)


@dataclass(frozen=True)
class PrivacyBudget:
    """Per-release privacy parameters plus the failure exponent used when
    reporting utility bounds."""

    epsilon: float
    delta: float
    a: float = 1.0

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not (0.0 <= self.delta < 1.0):
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"failure exponent must be positive, got {self.a}")


@dataclass(frozen=True, eq=False)
class NoisyRunConfig:
    """Everything a noisy-observation run needs besides the objective."""

    grid: HyperparamGrid
    kernel: KernelParams
    T: int
    budget: PrivacyBudget
    sigma2: float
    k1: DatasetSimilarity
    seed: int | None = None

    def __post_init__(self):
        if isinstance(self.k1, (int, float)):
            object.__setattr__(self, "k1", DatasetSimilarity(float(self.k1)))
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError(
                f"noisy runs need sigma2 > 0 (got {self.sigma2}); "
                "use run_exact for noise-free observations"
            )
        if self.budget.delta <= 0:
            raise ValueError("noisy runs need delta > 0")


@dataclass(frozen=True)
class SensitivityBundle:
    """Derived constants of one noisy run; all noise scales follow from these."""

    beta_T: float
    beta_T1: float
    c: float
    q: float
    C1: float
    gamma_T: float
    Omega: float
    Delta: float
    laplace_scale_v: float

    def __post_init__(self):
        for name in ("beta_T", "beta_T1", "c", "q", "C1", "gamma_T", "Omega", "Delta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def as_dict(self) -> dict:
        return {
            "beta_T": self.beta_T,
            "beta_T1": self.beta_T1,
            "c": self.c,
            "q": self.q,
            "C1": self.C1,
            "gamma_T": self.gamma_T,
            "Omega": self.Omega,
            "Delta": self.Delta,
            "laplace_scale_v": self.laplace_scale_v,
        }


@dataclass(frozen=True, eq=False)
class BOTrace:
    """The optimization trajectory: sampled indices, observations, and the
    posterior after the final refit."""

    indices: np.ndarray
    observed: np.ndarray
    posterior: gp.GPPosterior
    betas: np.ndarray


@dataclass(eq=False)
class ReleaseRecord:
    """Private outputs of a run with full provenance of the constants used."""

    mode: str
    lambda_tilde_index: int | None
    lambda_tilde: np.ndarray | None
    v_tilde: float | None
    f_tilde: float | None
    f_tilde_L: float | None
    constants: dict
    budget_spent: dict
    utility_bounds: dict
    seed: int | None = None
    bundle: SensitivityBundle | None = None
    trace: BOTrace | None = field(default=None, repr=False)

    def __post_init__(self):
        set_fields = [
            v for v in (self.v_tilde, self.f_tilde, self.f_tilde_L) if v is not None
        ]
        if len(set_fields) != 1:
            raise ValueError("exactly one released value field must be set")

    def to_dict(self) -> dict:
        """JSON-ready view; the raw trajectory stays out of released output."""
        out = {
            "mode": self.mode,
            "lambda_tilde_index": self.lambda_tilde_index,
            "lambda_tilde": None
            if self.lambda_tilde is None
            else [float(x) for x in self.lambda_tilde],
            "constants": {k: _jsonable(v) for k, v in self.constants.items()},
            "budget_spent": self.budget_spent,
            "utility_bounds": self.utility_bounds,
            "seed": self.seed,
        }
        for name in ("v_tilde", "f_tilde", "f_tilde_L"):
            value = getattr(self, name)
            if value is not None:
                out[name] = float(value)
        return out


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def compose_budget(releases) -> tuple[float, float]:
    """Componentwise sum of (epsilon, delta) costs."""
    releases = list(releases)
    if not releases:
        raise ValueError("no releases to compose")
    eps = sum(r[0] for r in releases)
    delta = sum(r[1] for r in releases)
    return float(eps), float(delta)


def compute_bundle(
    cfg: NoisyRunConfig,
    gamma: InfoGainBound | None = None,
    gram: np.ndarray | None = None,
) -> SensitivityBundle:
    """Evaluate every derived constant of a noisy run.

    c = 2 sqrt((1 - k1) log(3 |grid| / delta))
    q = sigma sqrt(4 log(3 / delta))
    C1 = 8 / log(1 + 1/sigma2)
    Omega = sqrt(C1 T beta_T gamma_T)
    Delta = 2 sqrt(beta_{T+1}) + c
    value noise scale = Omega / (eps T) + c/eps + q/eps
    """
    n = cfg.grid.size
    eps, delta = cfg.budget.epsilon, cfg.budget.delta
    if gamma is None:
        gamma = info_gain(cfg.grid, cfg.kernel, cfg.sigma2, cfg.T, gram=gram)
    sched = BetaSchedule(n, delta)
    beta_T = beta(cfg.T, sched)
    beta_T1 = beta(cfg.T + 1, sched)
    c = 2.0 * math.sqrt((1.0 - cfg.k1.k1) * math.log(3.0 * n / delta))
    q = math.sqrt(cfg.sigma2) * math.sqrt(4.0 * math.log(3.0 / delta))
    C1 = 8.0 / math.log1p(1.0 / cfg.sigma2)
    omega = math.sqrt(C1 * cfg.T * beta_T * gamma.gamma_t)
    delta_sens = 2.0 * math.sqrt(beta_T1) + c
    scale_v = omega / (eps * cfg.T) + c / eps + q / eps
    return SensitivityBundle(
        beta_T=beta_T,
        beta_T1=beta_T1,
        c=c,
        q=q,
        C1=C1,
        gamma_T=gamma.gamma_t,
        Omega=omega,
        Delta=delta_sens,
        laplace_scale_v=scale_v,
    )


def _observe(objective, point, indices, values):
    try:
        v = float(objective(point))
    except Exception as exc:
        raise ObjectiveError(
            f"objective failed at step {len(values) + 1}: {exc}", indices, values
        ) from exc
    if not math.isfinite(v):
        raise ObjectiveError(
            f"objective returned non-finite value {v} at step {len(values) + 1}",
            indices,
            values,
        )
    return v


def noisy_trace(
    objective: Callable[[np.ndarray], float],
    cfg: NoisyRunConfig,
    gram: np.ndarray | None = None,
) -> BOTrace:
    """Run the UCB loop for T steps and refit once more on the full log."""
    from . import backend

    G = gram if gram is not None else gram_matrix(cfg.grid.points, cfg.kernel)
    sched = BetaSchedule(cfg.grid.size, cfg.budget.delta)
    idx = np.empty(cfg.T, dtype=np.intp)
    vals = np.empty(cfg.T, dtype=np.float64)
    betas = np.empty(cfg.T, dtype=np.float64)
    n = G.shape[0]
    mu, var = np.zeros(n), np.ones(n)
    for t in range(1, cfg.T + 1):
        if t > 1:
            mu, var, _, _ = backend.posterior_from_gram(
                G, idx[: t - 1], vals[: t - 1], cfg.sigma2, 0.0
            )
        b = beta(t, sched)
        i = int(backend.ucb_argmax(mu, var, b))
        vals[t - 1] = _observe(objective, cfg.grid.points[i], idx[: t - 1], vals[: t - 1])
        idx[t - 1] = i
        betas[t - 1] = b
    post = gp.fit(
        cfg.grid,
        cfg.kernel,
        gp.ObservationLog(idx, vals, cfg.sigma2),
        gram=G,
    )
    return BOTrace(indices=idx, observed=vals, posterior=post, betas=betas)


def run_noisy(
    objective: Callable[[np.ndarray], float],
    cfg: NoisyRunConfig,
    rng: np.random.Generator | None = None,
    gram: np.ndarray | None = None,
    bundle: SensitivityBundle | None = None,
) -> ReleaseRecord:
    """Noisy-observation private release of the best hyper-parameter and value.

    Draw order is fixed (selection first, then the value perturbation) so a
    seeded generator replays the run exactly.  Passing a precomputed `gram`
    and `bundle` skips the per-run setup cost in repetition studies.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if gram is None:
        gram = gram_matrix(cfg.grid.points, cfg.kernel)
    if bundle is None:
        bundle = compute_bundle(cfg, gram=gram)
    eps, delta = cfg.budget.epsilon, cfg.budget.delta

    trace = noisy_trace(objective, cfg, gram=gram)
    lam_idx = exponential_select(
        ScoredCandidates(trace.posterior.means, bundle.Delta, eps), rng
    )
    v_star = float(trace.observed.max())
    v_tilde = v_star + laplace_sample(bundle.laplace_scale_v, rng)

    per_release = [
        {"released": "lambda_tilde", "epsilon": eps, "delta": delta},
        {"released": "v_tilde", "epsilon": eps, "delta": delta},
    ]
    total = compose_budget([(eps, delta), (eps, delta)])
    constants = {
        "grid_size": cfg.grid.size,
        "T": cfg.T,
        "epsilon": eps,
        "delta": delta,
        "sigma2": cfg.sigma2,
        "k1": cfg.k1.k1,
        **bundle.as_dict(),
    }
    record = ReleaseRecord(
        mode="noisy",
        lambda_tilde_index=lam_idx,
        lambda_tilde=np.array(cfg.grid.points[lam_idx]),
        v_tilde=v_tilde,
        f_tilde=None,
        f_tilde_L=None,
        constants=constants,
        budget_spent={
            "per_release": per_release,
            "total": {"epsilon": total[0], "delta": total[1]},
        },
        utility_bounds={},
        seed=cfg.seed,
        bundle=bundle,
        trace=trace,
    )
    record.utility_bounds = {
        "a": cfg.budget.a,
        "bounds": utility_bounds(record, cfg.budget.a),
    }
    return record


def _noise_free_trace(
    objective: Callable[[np.ndarray], float],
    grid: HyperparamGrid,
    params: KernelParams,
    T: int,
    acquisition: str = "ucb",
) -> BOTrace:
    """Noise-free UCB/EI loop; observed points are masked from reselection
    because a zero-noise posterior would be singular on duplicates."""
    from . import backend

    if T > grid.size:
        raise ValueError(
            f"noise-free runs cannot revisit points: T={T} exceeds grid size {grid.size}"
        )
    G = gram_matrix(grid.points, params)
    sched = BetaSchedule(grid.size, _LOOP_EXPLORATION_DELTA)
    n = grid.size
    idx = np.empty(T, dtype=np.intp)
    vals = np.empty(T, dtype=np.float64)
    betas = np.zeros(T, dtype=np.float64)
    mu, var = np.zeros(n), np.ones(n)
    observed = np.zeros(n, dtype=bool)
    for t in range(1, T + 1):
        if t > 1:
            mu, var, _, _ = backend.posterior_from_gram(
                G, idx[: t - 1], vals[: t - 1], 0.0, gp.NOISE_FREE_JITTER
            )
            var = np.clip(var, 0.0, None)
        if acquisition == "ucb":
            b = beta(t, sched)
            betas[t - 1] = b
            scores = mu + math.sqrt(b) * np.sqrt(var)
        elif acquisition == "ei":
            scores = _expected_improvement(mu, var, vals[: t - 1].max() if t > 1 else -np.inf)
        else:
            raise ValueError(f"unknown acquisition {acquisition!r}")
        scores = np.where(observed, -np.inf, scores)
        i = int(np.argmax(scores))
        vals[t - 1] = _observe(objective, grid.points[i], idx[: t - 1], vals[: t - 1])
        idx[t - 1] = i
        observed[i] = True
    post = gp.fit(grid, params, gp.ObservationLog(idx, vals, 0.0), gram=G)
    return BOTrace(indices=idx, observed=vals, posterior=post, betas=betas)


def _expected_improvement(mu, var, best):
    if not math.isfinite(best):
        return var.copy()
    sd = np.sqrt(var)
    out = np.zeros_like(mu)
    live = sd > 0
    z = (mu[live] - best) / sd[live]
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    cdf = 0.5 * (1.0 + erf(z / math.sqrt(2.0)))
    out[live] = (mu[live] - best) * cdf + sd[live] * pdf
    return out


def run_exact(
    objective: Callable[[np.ndarray], float],
    grid: HyperparamGrid,
    params: KernelParams,
    T: int,
    budget: PrivacyBudget,
    A: float,
    tau: float,
    k1: DatasetSimilarity | float = DatasetSimilarity(1.0),
    d: int | None = None,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> ReleaseRecord:
    """Noise-free private release of the best observed value.

    The search engine is the noise-free UCB loop; A and tau are the
    caller's regret constants for the no-noise optimizer and enter only
    through the noise scale (A / eps) exp(-2 tau / (log 2)^(d/4)) + c/eps.
    The released maximum deliberately excludes the first step.
    """
    if isinstance(k1, (int, float)):
        k1 = DatasetSimilarity(float(k1))
    if T < 2:
        raise ValueError("need T >= 2: the release maximizes over steps 2..T")
    if not (A > 0 and tau > 0):
        raise ValueError("A and tau must be positive")
    if budget.delta <= 0:
        raise ValueError("this release path needs delta > 0")
    if rng is None:
        rng = np.random.default_rng(seed)
    dim = grid.dim if d is None else int(d)
    eps, delta = budget.epsilon, budget.delta

    trace = _noise_free_trace(objective, grid, params, T)
    best_tail = float(trace.observed[1:].max())
    c = 2.0 * math.sqrt((1.0 - k1.k1) * math.log(2.0 * grid.size / delta))
    decay = math.exp(-2.0 * tau / math.log(2.0) ** (dim / 4.0))
    omega = A * decay
    scale = omega / eps + c / eps
    f_tilde = best_tail + laplace_sample(scale, rng)

    constants = {
        "grid_size": grid.size,
        "T": T,
        "epsilon": eps,
        "delta": delta,
        "k1": k1.k1,
        "A": A,
        "tau": tau,
        "d": dim,
        "c": c,
        "decay": decay,
        "Omega": omega,
        "laplace_scale_f": scale,
    }
    record = ReleaseRecord(
        mode="exact",
        lambda_tilde_index=None,
        lambda_tilde=None,
        v_tilde=None,
        f_tilde=f_tilde,
        f_tilde_L=None,
        constants=constants,
        budget_spent={
            "per_release": [{"released": "f_tilde", "epsilon": eps, "delta": delta}],
            "total": {"epsilon": eps, "delta": delta},
        },
        utility_bounds={},
        seed=seed,
        trace=trace,
    )
    record.utility_bounds = {"a": budget.a, "bounds": utility_bounds(record, budget.a)}
    return record


def run_lipschitz(
    train: LabeledDataset,
    val: LabeledDataset,
    lam_min: float,
    lam_max: float,
    T: int,
    epsilon: float,
    L: float | None = None,
    g_star: float | None = None,
    train_loss: str = "logistic",
    val_loss: str = "ramp",
    lam_grid: HyperparamGrid | None = None,
    grid_count: int = 20,
    acquisition: str = "ucb",
    kernel: KernelParams | None = None,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
    a: float = 1.0,
) -> ReleaseRecord:
    """Distribution-free private release of the best validation score.

    Works for any acquisition choice: privacy rests on the stability of
    regularized convex training and the bounded Lipschitz validation loss,
    not on how the regularization values were searched.  Pure eps-DP.
    """
    if lam_min <= 0:
        raise ValueError("lam_min must be positive: the sensitivity diverges at 0")
    if lam_max < lam_min:
        raise ValueError("lam_max must be >= lam_min")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if T < 1:
        raise ValueError("T must be >= 1")
    default_L, default_gstar = loss_constants(val_loss)
    L = default_L if L is None else float(L)
    g_star = default_gstar if g_star is None else float(g_star)
    if L <= 0 or g_star <= 0:
        raise ValueError("L and g* must be positive")
    if rng is None:
        rng = np.random.default_rng(seed)
    m = val.size

    if lam_grid is None:
        lam_values = (
            np.geomspace(lam_min, lam_max, grid_count)
            if lam_max > lam_min
            else np.array([lam_min])
        )
        lam_grid = HyperparamGrid.from_points(lam_values[:, None])
    lams = lam_grid.points[:, 0]
    if lams.min() < lam_min - 1e-12 or lams.max() > lam_max + 1e-12:
        raise ValueError("regularization grid must lie within [lam_min, lam_max]")

    # The GP searches over normalized log-regularization; this choice tunes
    # the search only and carries no privacy weight.
    if lam_max > lam_min:
        coords = (np.log(lams) - math.log(lam_min)) / (
            math.log(lam_max) - math.log(lam_min)
        )
    else:
        coords = np.zeros_like(lams)
    search_grid = HyperparamGrid.from_points(coords[:, None])
    params = kernel if kernel is not None else KernelParams("se", 0.2)

    coord_to_lam = {search_grid.points[i].tobytes(): lams[i] for i in range(len(lams))}

    def objective(point):
        lam = coord_to_lam[np.ascontiguousarray(point).tobytes()]
        model = train_erm(train, lam, loss=train_loss)
        return validation_score(model, val, g=val_loss)

    trace = _noise_free_trace(objective, search_grid, params, T, acquisition=acquisition)
    f_bo = float(trace.observed.max())
    swap_term = min(g_star / m, L / (m * lam_min)) / epsilon
    range_term = (lam_max - lam_min) * L / (epsilon * lam_max * lam_min)
    scale = swap_term + range_term
    f_tilde_l = f_bo + laplace_sample(scale, rng)

    best_step = int(np.argmax(trace.observed))
    constants = {
        "T": T,
        "epsilon": epsilon,
        "m": m,
        "L": L,
        "g_star": g_star,
        "lam_min": lam_min,
        "lam_max": lam_max,
        "swap_term": swap_term,
        "range_term": range_term,
        "laplace_scale_L": scale,
        "acquisition": acquisition,
    }
    record = ReleaseRecord(
        mode="lipschitz",
        lambda_tilde_index=None,
        lambda_tilde=None,
        v_tilde=None,
        f_tilde=None,
        f_tilde_L=f_tilde_l,
        constants=constants,
        budget_spent={
            "per_release": [{"released": "f_tilde_L", "epsilon": epsilon, "delta": 0.0}],
            "total": {"epsilon": epsilon, "delta": 0.0},
        },
        utility_bounds={},
        seed=seed,
        trace=trace,
    )
    record.constants["lambda_best_observed"] = float(lams[trace.indices[best_step]])
    record.utility_bounds = {"a": a, "bounds": utility_bounds(record, a)}
    return record


def utility_bounds(record: ReleaseRecord, a: float) -> dict:
    """Named high-probability bounds on how far the released values can sit
    from the true optimum (or, for the distribution-free path, from the
    best value the search actually found)."""
    return bounds_from_constants(record.mode, record.constants, a)


def bounds_from_constants(mode: str, constants: dict, a: float) -> dict:
    """utility_bounds from raw constants, without a completed run."""
    if a <= 0:
        raise ValueError("failure exponent must be positive")
    k = constants
    out: dict[str, dict] = {}
    if mode == "noisy":
        eps, delta = k["epsilon"], k["delta"]
        mech_gap = (2.0 * k["Delta"] / eps) * (math.log(k["grid_size"]) + a)
        out["mechanism_selection_gap"] = {
            "bound": mech_gap,
            "confidence": 1.0 - math.exp(-a),
        }
        out["selected_mean_vs_optimum"] = {
            "bound": 2.0 * math.sqrt(k["beta_T"]) + k["q"] + mech_gap,
            "confidence": 1.0 - (delta + math.exp(-a)),
        }
        out["released_value_vs_optimum"] = {
            "bound": math.sqrt(2.0 * math.log(2.0 * k["T"] / delta))
            + k["Omega"] / k["T"]
            + a * k["laplace_scale_v"],
            "confidence": 1.0 - (delta + math.exp(-a)),
        }
    elif mode == "exact":
        eps, delta = k["epsilon"], k["delta"]
        out["released_value_vs_optimum"] = {
            "bound": k["Omega"] + a * (k["Omega"] / eps + k["c"] / eps),
            "confidence": 1.0 - (delta + math.exp(-a)),
        }
    elif mode == "lipschitz":
        out["released_vs_best_found"] = {
            "bound": a * k["laplace_scale_L"],
            "confidence": 1.0 - math.exp(-a),
        }
    else:
        raise ValueError(f"unknown release mode {mode!r}")
    return out
