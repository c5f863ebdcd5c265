"""Tolerance goodness-of-fit tests for black-box probabilistic classifiers.

A holdout sample ``(x_i, y_i)`` is paired with synthetic labels
``y'_i ~ eta_hat(x_i)``; a distinguisher is trained to tell the two apart and
its rank-sum AUC is compared with ``1/2 + delta``.
"""

__version__ = "0.1.0"

from .data import (
    AugmentedDataset,
    FoldPartition,
    HoldoutDataset,
    augment,
    augment_with_probabilities,
    child_seed,
    partition_folds,
    split_indices,
    validate_simplex,
)
from .distinguish import ConstantProcedure, LassoProcedure, LogisticLabelSplit, fit_lasso, fit_logistic
from .errors import ClfGofError, NumericalError, ValidationError
from .procedure import TestConfig, TestReport, delta_min, normal_quantile, run_cross_test, run_split_test, run_test
from .ranksum import ScoredPair, empirical_projections, rank_sum, t_cross, t_split
from .variance import sigma_cross, sigma_split

__all__ = [
    "AugmentedDataset", "FoldPartition", "HoldoutDataset", "augment", "augment_with_probabilities",
    "child_seed", "partition_folds", "split_indices", "validate_simplex",
    "ConstantProcedure", "LassoProcedure", "LogisticLabelSplit", "fit_lasso", "fit_logistic",
    "ClfGofError", "NumericalError", "ValidationError",
    "TestConfig", "TestReport", "delta_min", "normal_quantile", "run_cross_test", "run_split_test", "run_test",
    "ScoredPair", "empirical_projections", "rank_sum", "t_cross", "t_split",
    "sigma_cross", "sigma_split",
]
