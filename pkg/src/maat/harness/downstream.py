"""Downstream detection: label training vectors with a strategy, fit a detector, score it on ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..forest import ConfusionCounts, derive_seed, fit_forest, mcc
from ..forest.validation import cross_validate_model, mean_accuracy
from ..reports import GroundTruth, Label, MaatError, MissingReportError, Snapshot
from .classifiers import gnb_fit, knn_predict_many, linear_svm_fit
from .evaluation import apply_strategy


class ClassifierKind(str, Enum):
    KNN = "knn"
    RF = "rf"
    GNB = "gnb"
    LINEAR_SVM = "linear_svm"


@dataclass(frozen=True)
class ClassifierSpec:
    kind: ClassifierKind
    knn_k_grid: Tuple[int, ...] = (11, 26, 51, 101)
    rf_trees_grid: Tuple[int, ...] = (25, 50, 75, 100)
    svm_lambda: float = 1e-4
    svm_epochs: int = 20
    seed: int = 0
    folds: int = 10

    def __post_init__(self):
        object.__setattr__(self, "kind", ClassifierKind(self.kind))
        object.__setattr__(self, "knn_k_grid", tuple(int(k) for k in self.knn_k_grid))
        object.__setattr__(self, "rf_trees_grid", tuple(int(k) for k in self.rf_trees_grid))
        if not self.knn_k_grid or not self.rf_trees_grid:
            raise ValueError("classifier grids must be non-empty")
        if min(self.knn_k_grid) < 1 or min(self.rf_trees_grid) < 1:
            raise ValueError("grid values must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


@dataclass(frozen=True)
class VectorSet:
    """Precomputed feature vectors keyed by app id."""

    app_ids: Tuple[str, ...]
    X: np.ndarray
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        object.__setattr__(self, "app_ids", tuple(self.app_ids))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", tuple(self.names))
        if X.ndim != 2 or X.shape[0] != len(self.app_ids):
            raise ValueError("need one feature row per app id")
        if len(set(self.app_ids)) != len(self.app_ids):
            raise ValueError("duplicate app ids in vectors")


@dataclass
class DownstreamResult:
    classifier: str
    strategy: str
    params: dict
    cv_accuracy: Optional[float]
    counts: ConfusionCounts
    mcc: float
    train_label_counts: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        c = self.counts
        return {
            "classifier": self.classifier,
            "strategy": self.strategy,
            "params": self.params,
            "cv_accuracy": self.cv_accuracy,
            "counts": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
            "mcc": self.mcc,
            "train_label_counts": self.train_label_counts,
        }


@dataclass(frozen=True)
class GroundTruthStrategy:
    """Labels each report with its true class: the noiseless upper bound."""

    truth: GroundTruth
    name: str = "truth"

    def label(self, report) -> Label:
        return self.truth[report.app_id]


@dataclass(frozen=True)
class InvertedStrategy:
    """Flips every label of another strategy."""

    base: object
    name: str = "inverted"

    def label(self, report) -> Label:
        return Label(1 - int(self.base.label(report)))


def strategy_name(strategy) -> str:
    return getattr(strategy, "name", None) or type(strategy).__name__


def _seed(spec: ClassifierSpec, fold: Optional[int]) -> int:
    return spec.seed if fold is None else derive_seed(spec.seed, fold)


def _fitter(spec: ClassifierSpec, param) -> Tuple[Callable, Callable]:
    """(fit(X, y, fold), predict(model, X)) for one grid point; fold None is the final refit."""
    if spec.kind == ClassifierKind.KNN:
        return (lambda X, y, k: (X, y)), (lambda m, Xv: knn_predict_many(m[0], m[1], Xv, param))
    if spec.kind == ClassifierKind.RF:
        return (
            lambda X, y, k: fit_forest(X, y, param, None, _seed(spec, k)),
            lambda m, Xv: m.predict(Xv),
        )
    if spec.kind == ClassifierKind.GNB:
        return (lambda X, y, k: gnb_fit(X, y)), (lambda m, Xv: m.predict(Xv))
    return (
        lambda X, y, k: linear_svm_fit(X, y, spec.svm_lambda, spec.svm_epochs, _seed(spec, k)),
        lambda m, Xv: m.predict(Xv),
    )


def fit_classifier(X, y, spec: ClassifierSpec, jobs: int = 1):
    """Fit ``spec.kind`` on all rows, choosing k / tree count by CV accuracy (first grid entry wins ties).

    Returns (predict function, params, cv accuracy or None).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError("training labels contain a single class")
    cv = None
    if spec.kind in (ClassifierKind.KNN, ClassifierKind.RF):
        key = "k" if spec.kind == ClassifierKind.KNN else "n_estimators"
        grid = spec.knn_k_grid if spec.kind == ClassifierKind.KNN else spec.rf_trees_grid
        if spec.kind == ClassifierKind.KNN:
            # every fold must hold at least k training rows
            smallest_train = len(y) - math.ceil(len(y) / spec.folds)
            grid = tuple(k for k in grid if k <= smallest_train)
            if not grid:
                raise ValueError(f"too few training rows ({len(y)}) for every k in the grid")
        best, best_acc = grid[0], -math.inf
        for param in grid:
            fit, predict = _fitter(spec, param)
            acc = mean_accuracy(cross_validate_model(fit, predict, X, y, spec.folds, spec.seed, jobs))
            if acc > best_acc:
                best, best_acc = param, acc
        params, cv = {key: best}, best_acc
    elif spec.kind == ClassifierKind.LINEAR_SVM:
        best = None
        params = {"lambda": spec.svm_lambda, "epochs": spec.svm_epochs}
    else:
        best, params = None, {}
    fit, predict = _fitter(spec, best)
    model = fit(X, y, None)
    return (lambda Xv: predict(model, np.asarray(Xv, dtype=np.float64))), params, cv


def strategy_labels(strategy, vectors: VectorSet, reports: Snapshot) -> np.ndarray:
    missing = [a for a in vectors.app_ids if a not in reports.reports]
    if missing:
        raise MissingReportError(f"{len(missing)} training vectors have no report, e.g. {missing[0]}")
    snap = Snapshot(reports.date, {a: reports.reports[a] for a in vectors.app_ids})
    labels = apply_strategy(strategy, snap)
    return np.array([int(labels[a]) for a in vectors.app_ids], dtype=np.int64)


def downstream_experiment(
    train: VectorSet,
    train_reports: Snapshot,
    strategy,
    test: VectorSet,
    test_gt: GroundTruth,
    spec: ClassifierSpec,
    jobs: int = 1,
) -> DownstreamResult:
    """Label ``train`` with ``strategy``, fit the classifier and score it on ``test`` against ``test_gt``."""
    if train.X.shape[1] != test.X.shape[1]:
        raise ValueError("train and test vectors have different feature counts")
    name = strategy_name(strategy)
    y = strategy_labels(strategy, train, train_reports)
    if len(np.unique(y)) < 2:
        only = Label(int(y[0])) if len(y) else "nothing"
        raise MaatError(f"strategy {name} labelled every training vector {only}; cannot train a classifier")
    try:
        truth = np.array([int(test_gt[a]) for a in test.app_ids], dtype=np.int64)
    except KeyError as exc:
        raise MissingReportError(f"test vector {exc.args[0]} has no ground-truth label") from exc
    predict, params, cv = fit_classifier(train.X, y, spec, jobs)
    counts = ConfusionCounts.from_labels(truth, predict(test.X))
    label_counts = {str(Label(c)): int(n) for c, n in enumerate(np.bincount(y, minlength=2))}
    return DownstreamResult(spec.kind.value, name, params, cv, counts, mcc(counts), label_counts)


def downstream_grid(
    train: VectorSet,
    train_reports: Snapshot,
    strategies: Sequence,
    test: VectorSet,
    test_gt: GroundTruth,
    specs: Sequence[ClassifierSpec],
    jobs: int = 1,
) -> List[DownstreamResult]:
    """Every (strategy, classifier) cell, strategy-major."""
    return [downstream_experiment(train, train_reports, s, test, test_gt, c, jobs) for s in strategies for c in specs]
