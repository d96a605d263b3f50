"""Average-case convergence of first-order methods on random quadratics."""

__version__ = "0.1.0"

from .errors import (
    AvgCaseError,
    ConfigError,
    DegeneracyError,
    DivergenceError,
    PrecisionError,
    SingularCoefficientError,
    UnsupportedOperationError,
)
from .optimizers import Trajectory, run_gcm, run_gd, run_laguerre, run_nesterov
from .polynomials import GCM, GD, Laguerre, Nesterov, expected_metric, expected_metrics
from .problems import QuadraticProblem, gram_problem, spectrum_problem
from .rates import (
    RateSpec,
    fit_slope,
    gcm_avg_exponent,
    gcm_worst_exponent,
    gd_avg_exponent,
    laguerre_exponent,
    nesterov_avg_exponent,
    optimal_exponent,
)
from .spectra import Beta, Empirical, Gamma, MarchenkoPastur

__all__ = [
    "AvgCaseError",
    "Beta",
    "ConfigError",
    "DegeneracyError",
    "DivergenceError",
    "Empirical",
    "GCM",
    "GD",
    "Gamma",
    "Laguerre",
    "MarchenkoPastur",
    "Nesterov",
    "PrecisionError",
    "QuadraticProblem",
    "RateSpec",
    "SingularCoefficientError",
    "Trajectory",
    "UnsupportedOperationError",
    "expected_metric",
    "expected_metrics",
    "fit_slope",
    "gcm_avg_exponent",
    "gcm_worst_exponent",
    "gd_avg_exponent",
    "gram_problem",
    "laguerre_exponent",
    "nesterov_avg_exponent",
    "optimal_exponent",
    "run_gcm",
    "run_gd",
    "run_laguerre",
    "run_nesterov",
    "spectrum_problem",
]
