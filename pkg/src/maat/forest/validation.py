"""k-fold cross-validation and max-depth grid search for forests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .ensemble import RandomForest, _map, derive_seed, fit_forest
from .metrics import ConfusionCounts
from .tree import _as_xy

DEFAULT_DEPTH_GRID: Tuple[Optional[int], ...] = (1, 4, 10, None)


def kfold_indices(n: int, folds: int, seed: int) -> List[np.ndarray]:
    """One seeded shuffle, then ``folds`` contiguous (unstratified) blocks."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds > n:
        raise ValueError(f"cannot split {n} rows into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def cross_validate_model(
    fit: Callable, predict: Callable, X, y, folds: int = 10, seed: int = 0, jobs: int = 1
) -> List[ConfusionCounts]:
    """Per-fold confusion counts for an arbitrary learner.

    ``fit(X_train, y_train, fold_index)`` returns a model and
    ``predict(model, X_val)`` returns 0/1 labels.
    """
    X, y = _as_xy(X, y)
    parts = kfold_indices(len(y), folds, seed)

    def run(k):
        val = parts[k]
        train = np.concatenate([p for j, p in enumerate(parts) if j != k])
        model = fit(X[train], y[train], k)
        return ConfusionCounts.from_labels(y[val], predict(model, X[val]))

    return _map(run, range(folds), jobs)


def mean_accuracy(fold_counts: Sequence[ConfusionCounts]) -> float:
    return math.fsum(c.accuracy for c in fold_counts) / len(fold_counts)


def cross_validate_details(
    X, y, n_estimators: int, max_depth: Optional[int], folds: int = 10, seed: int = 0, jobs: int = 1
) -> List[ConfusionCounts]:
    X, y = _as_xy(X, y)
    if len(np.unique(y)) < 2:
        raise ValueError("cross-validation needs both classes")

    def fit(Xt, yt, k):
        # trees inside a fold stay sequential; parallelism is across folds
        return fit_forest(Xt, yt, n_estimators, max_depth, derive_seed(seed, k))

    return cross_validate_model(fit, lambda m, Xv: m.predict(Xv), X, y, folds, seed, jobs)


def cross_validate(
    X, y, n_estimators: int, max_depth: Optional[int], folds: int = 10, seed: int = 0, jobs: int = 1
) -> float:
    """Mean validation accuracy of a forest over ``folds`` folds."""
    return mean_accuracy(cross_validate_details(X, y, n_estimators, max_depth, folds, seed, jobs))


@dataclass(frozen=True)
class GridSearchConfig:
    max_depth_grid: Tuple[Optional[int], ...] = DEFAULT_DEPTH_GRID
    folds: int = 10
    n_estimators: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "max_depth_grid", tuple(self.max_depth_grid))
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not self.max_depth_grid:
            raise ValueError("max_depth grid is empty")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")


class GridSearchResult(NamedTuple):
    best_params: dict
    forest: RandomForest
    scores: List[Tuple[Optional[int], float]]


def grid_search(X, y, config: GridSearchConfig, schema=None, jobs: int = 1) -> GridSearchResult:
    """Pick max_depth by mean CV accuracy (first grid entry wins ties), then refit on all rows."""
    scores = []
    best_depth, best = None, -math.inf
    for depth in config.max_depth_grid:
        acc = cross_validate(X, y, config.n_estimators, depth, config.folds, config.seed, jobs)
        scores.append((depth, acc))
        if acc > best:
            best_depth, best = depth, acc
    forest = fit_forest(X, y, config.n_estimators, best_depth, config.seed, schema=schema, jobs=jobs)
    forest.hyperparams["cv_accuracy"] = best
    forest.hyperparams["grid"] = [[d, a] for d, a in scores]
    params = {"max_depth": best_depth, "n_estimators": config.n_estimators}
    return GridSearchResult(params, forest, scores)
