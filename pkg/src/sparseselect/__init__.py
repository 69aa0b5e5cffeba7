"""Sparse variable selection via l1 and l1+l2 penalized regression, with the
finite-sample tuning constants, design diagnostics, and Monte Carlo
guarantee checks that make selection claims auditable."""

from . import diagnostics, experiments, tuning
from .data import (
    Dataset,
    GramMatrix,
    TrueModel,
    WeightedGram,
    gram,
    load_csv,
    standardize,
    to_raw_scale,
    weighted_gram,
)
from .solvers import (
    FitOptions,
    FitResult,
    KKTReport,
    PenaltySpec,
    backend_name,
    fit,
    kkt_check,
    soft_threshold,
    support_of,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "GramMatrix",
    "TrueModel",
    "WeightedGram",
    "FitOptions",
    "FitResult",
    "KKTReport",
    "PenaltySpec",
    "backend_name",
    "diagnostics",
    "experiments",
    "fit",
    "gram",
    "kkt_check",
    "load_csv",
    "soft_threshold",
    "standardize",
    "support_of",
    "to_raw_scale",
    "tuning",
    "weighted_gram",
]
