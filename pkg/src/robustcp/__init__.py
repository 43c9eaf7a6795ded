"""Robust change-point and change-plane estimation.

Fits two-level (stump) models in one dimension and change-plane models in
higher dimensions under a family of criteria (least squares, least absolute
deviations, and Huber losses in between), simulates the limiting
compound-Poisson-process minimizer distributions, and provides experiment
drivers for quantile tables, tail profiles, and rate comparisons.
"""

__version__ = "0.1.0"

from .changeplane import (
    PenaltyConfig,
    PlaneFit,
    PlaneModel,
    dist_semimetric,
    fit_plane,
    fit_sparse_plane,
    penalty,
    two_shot_refit,
    wedge_prob,
)
from .criterion import CriterionSpec, CurvatureCheck, curvature_margin, location_mestimate, loss
from .distributions import CovariateLaw, ErrorLaw, seed_stream
from .limitlaw import (
    QUANTILE_LEVELS,
    CPPConfig,
    QuantileTable,
    StepLaw,
    default_stop_barrier,
    log_survival_slope,
    quantile_table,
    rw_stay_negative_check,
    simulate_cbp_midargmin,
    simulate_cpp_midargmin,
    simulate_cpp_samples,
    simulate_rw_minimizer,
    tail_profile,
)
from .parallel import ParallelConfig, max_deviation, max_deviation_replicates, rate_summary
from .stump import Dataset1D, MidArgmin, StumpFit, StumpModel, fit_known_levels, fit_stump, mid_argmin

__all__ = [
    "CPPConfig",
    "CovariateLaw",
    "CriterionSpec",
    "CurvatureCheck",
    "Dataset1D",
    "ErrorLaw",
    "MidArgmin",
    "ParallelConfig",
    "PenaltyConfig",
    "PlaneFit",
    "PlaneModel",
    "QUANTILE_LEVELS",
    "QuantileTable",
    "StepLaw",
    "StumpFit",
    "StumpModel",
    "curvature_margin",
    "default_stop_barrier",
    "dist_semimetric",
    "fit_known_levels",
    "fit_plane",
    "fit_sparse_plane",
    "fit_stump",
    "location_mestimate",
    "log_survival_slope",
    "loss",
    "max_deviation",
    "max_deviation_replicates",
    "mid_argmin",
    "penalty",
    "quantile_table",
    "rate_summary",
    "rw_stay_negative_check",
    "seed_stream",
    "simulate_cbp_midargmin",
    "simulate_cpp_midargmin",
    "simulate_cpp_samples",
    "simulate_rw_minimizer",
    "tail_profile",
    "two_shot_refit",
    "wedge_prob",
]
