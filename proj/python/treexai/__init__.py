"""Logic-based and Shapley explanations of tree-ensemble alerts."""

from ._core import (
    Ensemble,
    all_minimal,
    decide_invariance,
    evaluate,
    is_valid,
    load_model,
    one_minimal,
    parse_model,
    shapley_tree,
)

__all__ = [
    "Ensemble",
    "all_minimal",
    "decide_invariance",
    "evaluate",
    "is_valid",
    "load_model",
    "one_minimal",
    "parse_model",
    "shapley_tree",
]
