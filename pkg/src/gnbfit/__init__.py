"""Minimum-distance fitting of generalized negative binomial and generalized
gamma distributions: density/pmf evaluation for the four model families,
integer-rule and Freedman-Diaconis histograms, l1/l2/linf discrete and
L1/L2/Linf continuous objectives, simplex-search estimation, and a CLI.
"""

from .distributions import (
    GammaParams,
    GGParams,
    NBParams,
    gamma_pdf,
    gg_log_pdf,
    gg_mean,
    gg_pdf,
    gg_power_identity_check,
    gnb_log_pmf,
    gnb_pmf,
    gnb_pmf_batch,
    gnb_recurrence_residual,
    gnb_truncation_k,
    nb_pmf,
    sample_gamma,
    sample_gg,
    sample_gnb,
)
from .errors import DegenerateDataError, EstimationError, ParseError, QuadratureError
from .fitting import FitRequest, FitResult, Sample, SampleKind, error_report, fit, moment_starts
from .histogram import BinRule, Histogram, bin_fd, bin_integer
from .numerics import (
    QuadratureResult,
    integrate_interval,
    integrate_semiinfinite,
    log_gamma,
    log_sum_exp,
)
from .objectives import (
    MetricKind,
    ModelFamily,
    bin_deviation_integrals,
    continuous_objective,
    discrete_deviation,
    discrete_objective,
)
from .optimizer import Domain, OptimResult, SimplexOptions, make_transform, minimize, minimize_multistart

__version__ = "0.1.0"

__all__ = [
    "BinRule",
    "DegenerateDataError",
    "Domain",
    "EstimationError",
    "FitRequest",
    "FitResult",
    "GGParams",
    "GammaParams",
    "Histogram",
    "MetricKind",
    "ModelFamily",
    "NBParams",
    "OptimResult",
    "ParseError",
    "QuadratureError",
    "QuadratureResult",
    "Sample",
    "SampleKind",
    "SimplexOptions",
    "bin_deviation_integrals",
    "bin_fd",
    "bin_integer",
    "continuous_objective",
    "discrete_deviation",
    "discrete_objective",
    "error_report",
    "fit",
    "gamma_pdf",
    "gg_log_pdf",
    "gg_mean",
    "gg_pdf",
    "gg_power_identity_check",
    "gnb_log_pmf",
    "gnb_pmf",
    "gnb_pmf_batch",
    "gnb_recurrence_residual",
    "gnb_truncation_k",
    "integrate_interval",
    "integrate_semiinfinite",
    "log_gamma",
    "log_sum_exp",
    "make_transform",
    "minimize",
    "minimize_multistart",
    "moment_starts",
    "nb_pmf",
    "sample_gamma",
    "sample_gg",
    "sample_gnb",
]
