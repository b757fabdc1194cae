from .ensemble import MODEL_VERSION, RandomForest, derive_seed, fit_forest, sqrt_features
from .metrics import ConfusionCounts, accuracy, mcc
from .render import render_tree
from .tree import DecisionTree, Leaf, Split, fit_tree, gini, predict_tree
from .validation import (
    DEFAULT_DEPTH_GRID,
    GridSearchConfig,
    GridSearchResult,
    cross_validate,
    cross_validate_details,
    cross_validate_model,
    grid_search,
    kfold_indices,
)

__all__ = [
    "MODEL_VERSION",
    "RandomForest",
    "derive_seed",
    "fit_forest",
    "sqrt_features",
    "ConfusionCounts",
    "accuracy",
    "mcc",
    "render_tree",
    "DecisionTree",
    "Leaf",
    "Split",
    "fit_tree",
    "gini",
    "predict_tree",
    "DEFAULT_DEPTH_GRID",
    "GridSearchConfig",
    "GridSearchResult",
    "cross_validate",
    "cross_validate_details",
    "cross_validate_model",
    "grid_search",
    "kfold_indices",
]
