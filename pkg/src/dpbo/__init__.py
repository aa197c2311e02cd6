"""Differentially private Bayesian optimization on finite grids.

Gaussian-process search with UCB, plus three private release paths for
the best hyper-parameter and best objective value, with all sensitivity
constants derived explicitly and utility bounds reported alongside every
release.
"""

from .acquisition import BetaSchedule, InfoGainBound, InfoGainMethod, beta, info_gain, ucb_select
from .backend import USING_COMPILED
from .convex import (
    ConvergenceError,
    LabeledDataset,
    ModelWeights,
    loss_constants,
    stability_bound,
    train_erm,
    validation_score,
)
from .gp import (
    GPPosterior,
    ObservationLog,
    SingularModelError,
    fit,
    log_marginal_likelihood,
    predict,
)
from .grid import HyperparamGrid
from .kernels import (
    DatasetSimilarity,
    KernelFamily,
    KernelParams,
    gram_matrix,
    jaccard,
    k2_eval,
    multi_task_kernel,
)
from .mechanisms import (
    LaplaceScale,
    ScoredCandidates,
    exponential_select,
    laplace_release,
    laplace_sample,
)
from .mtgp import (
    ConvexValidationPipeline,
    EvalMatrices,
    LikelihoodCurve,
    SyntheticMTGPPipeline,
    build_matrices,
    likelihood_curve,
)
from .release import (
    BOTrace,
    NoisyRunConfig,
    ObjectiveError,
    PrivacyBudget,
    ReleaseRecord,
    SensitivityBundle,
    compose_budget,
    compute_bundle,
    noisy_trace,
    run_exact,
    run_lipschitz,
    run_noisy,
    utility_bounds,
)
from .sobol import sobol_points
from .synthetic import TabulatedObjective, draw_gp_values, draw_paired_gp_values

__version__ = "0.1.0"

__all__ = [
    "BetaSchedule",
    "BOTrace",
    "ConvergenceError",
    "ConvexValidationPipeline",
    "DatasetSimilarity",
    "EvalMatrices",
    "GPPosterior",
    "HyperparamGrid",
    "InfoGainBound",
    "InfoGainMethod",
    "KernelFamily",
    "KernelParams",
    "LabeledDataset",
    "LaplaceScale",
    "LikelihoodCurve",
    "ModelWeights",
    "NoisyRunConfig",
    "ObjectiveError",
    "ObservationLog",
    "PrivacyBudget",
    "ReleaseRecord",
    "ScoredCandidates",
    "SensitivityBundle",
    "SingularModelError",
    "SyntheticMTGPPipeline",
    "TabulatedObjective",
    "USING_COMPILED",
    "beta",
    "build_matrices",
    "compose_budget",
    "compute_bundle",
    "draw_gp_values",
    "draw_paired_gp_values",
    "exponential_select",
    "fit",
    "gram_matrix",
    "info_gain",
    "jaccard",
    "k2_eval",
    "laplace_release",
    "laplace_sample",
    "likelihood_curve",
    "log_marginal_likelihood",
    "loss_constants",
    "multi_task_kernel",
    "noisy_trace",
    "predict",
    "run_exact",
    "run_lipschitz",
    "run_noisy",
    "sobol_points",
    "stability_bound",
    "train_erm",
    "ucb_select",
    "utility_bounds",
    "validation_score",
]
