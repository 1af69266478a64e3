"""Python bindings for the synsem pipeline core."""

from ._core import (
    FormatError,
    InputError,
    Runner,
    ValidationError,
    align_events,
    brain_scores,
    decompose,
    fdr_bh,
    load_matrix,
    loo_errors,
    pearson,
    ridge_fit,
    robust_standardize,
    select_lambda,
    store_matrix,
    tree_distances,
    tree_similarity,
    wilcoxon,
)

__all__ = [
    "FormatError",
    "InputError",
    "Runner",
    "ValidationError",
    "align_events",
    "brain_scores",
    "decompose",
    "fdr_bh",
    "load_matrix",
    "loo_errors",
    "pearson",
    "ridge_fit",
    "robust_standardize",
    "select_lambda",
    "store_matrix",
    "tree_distances",
    "tree_similarity",
    "wilcoxon",
]
