"""Isotonic preference functions on multi-criteria rating lattices.

Fit a coordinate-wise non-decreasing map from criteria scores to overall
scores, regularized toward a non-negative linear model with the weight chosen
on a hold-out split, and measure how far such fits are from the truth, from
each other and from linear fits.
"""

from .cv import CvResult, cross_validate, default_grid
from .isotonic import isotonic_fit, isotonic_oracle
from .lattice import Dataset, InputError, LatticeSpec, OrderDag, RecordRangeError, is_isotonic
from .metrics import (
    EmpiricalDistribution,
    MetricReport,
    bootstrap_ci,
    criteria_effect_curve,
    estimation_error,
    irreducible_error,
    kendall_tau_distance,
    metric_report,
    prediction_error,
    preference_misalignment,
    reducible_error,
)
from .postprocess import Mode, PreferenceModel, evaluate, evaluate_many, post_process
from .rls import LinearModel, RlsSolution, nnls_fit, rls_solve

__all__ = [
    "CvResult",
    "Dataset",
    "EmpiricalDistribution",
    "InputError",
    "LatticeSpec",
    "LinearModel",
    "MetricReport",
    "Mode",
    "OrderDag",
    "PreferenceModel",
    "RecordRangeError",
    "RlsSolution",
    "bootstrap_ci",
    "criteria_effect_curve",
    "cross_validate",
    "default_grid",
    "estimation_error",
    "evaluate",
    "evaluate_many",
    "irreducible_error",
    "is_isotonic",
    "isotonic_fit",
    "isotonic_oracle",
    "kendall_tau_distance",
    "metric_report",
    "nnls_fit",
    "post_process",
    "prediction_error",
    "preference_misalignment",
    "reducible_error",
    "rls_solve",
]
