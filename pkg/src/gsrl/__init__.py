"""Group square-root lasso: solver, sigma-free tuning, diagnostics, simulations."""

from ._kernels import BACKEND
from .core import (
    GroupPartition,
    GsrlFit,
    GsrlProblem,
    TrueModel,
    multivariate_to_grouped,
    noise_statistic_v,
    normalize_design,
    objective_value,
)
from .solver import (
    ExactFitError,
    PathConfig,
    SolutionPath,
    SolverConfig,
    default_path_grid,
    fit,
    fit_general,
    fit_path,
    kkt_check,
    kkt_check_general,
    lambda_max,
    operator_norm,
    soft_threshold_group,
    stisp_iterate,
)
from .tuning import (
    TuningInputs,
    TuningResult,
    cross_validate,
    lambda_corollary,
    lambda_fdist,
    lambda_gaussian,
    lambda_srl_theoretical,
    restricted_ols,
    scv_bic,
    tune_fdist,
)

__all__ = [
    "BACKEND",
    "ExactFitError",
    "GroupPartition",
    "GsrlFit",
    "GsrlProblem",
    "PathConfig",
    "SolutionPath",
    "SolverConfig",
    "TrueModel",
    "TuningInputs",
    "TuningResult",
    "cross_validate",
    "default_path_grid",
    "fit",
    "fit_general",
    "fit_path",
    "kkt_check",
    "kkt_check_general",
    "lambda_corollary",
    "lambda_fdist",
    "lambda_gaussian",
    "lambda_max",
    "lambda_srl_theoretical",
    "multivariate_to_grouped",
    "noise_statistic_v",
    "normalize_design",
    "objective_value",
    "operator_norm",
    "restricted_ols",
    "scv_bic",
    "soft_threshold_group",
    "stisp_iterate",
    "tune_fdist",
]

__version__ = "0.1.0"
