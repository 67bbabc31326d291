"""Low-rank multivariate regression: reduced-rank and nuclear-norm-penalized
estimators, design diagnostics, oracle-bound evaluation and simulation."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    check_oracle,
    gaussian_oracle_bound,
    lambda_calibrated,
    lambda_noise_min,
    oracle_bound,
)
from .design import DesignSummary, check_min_singular_value, check_ri_property, summarize_design
from .estimators import (
    FitResult,
    SolverOptions,
    fit_nnp,
    fit_nnp_orthogonal,
    fit_reduced_rank,
    fit_reduced_rank_path,
    nnp_objective,
    select_rank,
)
from .exceptions import DegenerateDesignError, InputError, MatrixParseError, PreconditionError
from .matlin import ThinSVD, thin_svd
from .regressors import NuclearNormRegression, ReducedRankRegression
from .simkit import MCReport, TrialConfig, TrialReport, monte_carlo, run_trial

__all__ = [
    "BoundReport",
    "DegenerateDesignError",
    "DesignSummary",
    "FitResult",
    "InputError",
    "MCReport",
    "MatrixParseError",
    "NuclearNormRegression",
    "PreconditionError",
    "ReducedRankRegression",
    "SolverOptions",
    "ThinSVD",
    "TrialConfig",
    "TrialReport",
    "check_min_singular_value",
    "check_oracle",
    "check_ri_property",
    "gaussian_oracle_bound",
    "fit_nnp",
    "fit_nnp_orthogonal",
    "fit_reduced_rank",
    "fit_reduced_rank_path",
    "lambda_calibrated",
    "lambda_noise_min",
    "monte_carlo",
    "nnp_objective",
    "run_trial",
    "select_rank",
    "summarize_design",
    "oracle_bound",
    "thin_svd",
]
