"""CART decision trees with Gini splitting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..reports import Label
from ._kernel import apply_tree, build_tree


def gini(counts: Sequence[float]) -> float:
    n0, n1 = counts
    n = n0 + n1
    if n <= 0:
        raise ValueError("gini of an empty node")
    return 1.0 - (n0 / n) ** 2 - (n1 / n) ** 2


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple
    prediction: Label
    gini: float


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: Union["Split", Leaf]
    right: Union["Split", Leaf]
    class_counts: tuple
    gini: float


TreeNode = Union[Split, Leaf]


def _as_xy(X, y=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if X.shape[0] == 0:
        raise ValueError("empty training data")
    if y is None:
        return X
    y = np.asarray(y, dtype=np.int64).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("labels must be 0 (benign) or 1 (malicious)")
    return X, y


class DecisionTree:
    """A fitted binary CART tree stored as flat node arrays.

    Rows go left when ``x[feature] <= threshold``. Leaves predict the majority
    class of their (weighted) training rows, benign on a tie.
    """

    def __init__(self, feature, threshold, left, right, counts, n_features, max_depth=None):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64).reshape(-1, 2)
        self.n_features = int(n_features)
        self.max_depth = max_depth
        self.importances = self._importances()

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def node_gini(self) -> np.ndarray:
        n = self.counts.sum(axis=1).astype(np.float64)
        p = self.counts / n[:, None]
        return 1.0 - (p**2).sum(axis=1)

    @property
    def leaf_prediction(self) -> np.ndarray:
        return (self.counts[:, 1] > self.counts[:, 0]).astype(np.int64)

    def impurity_decrease(self, node: int) -> float:
        if self.feature[node] < 0:
            return 0.0
        g = self.node_gini
        n = self.counts[node].sum()
        l, r = self.left[node], self.right[node]
        nl, nr = self.counts[l].sum(), self.counts[r].sum()
        return float(g[node] - (nl * g[l] + nr * g[r]) / n)

    def _importances(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        splits = np.flatnonzero(self.feature >= 0)
        if len(splits) == 0:
            return imp
        g = self.node_gini
        n = self.counts.sum(axis=1).astype(np.float64)
        l, r = self.left[splits], self.right[splits]
        dec = g[splits] - (n[l] * g[l] + n[r] * g[r]) / n[splits]
        np.add.at(imp, self.feature[splits], n[splits] / n[0] * dec)
        s = imp.sum()
        return imp / s if s > 0 else imp

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] >= 0:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def apply(self, X) -> np.ndarray:
        X = _as_xy(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return self.leaf_prediction[self.apply(X)]

    def predict_one(self, x) -> Label:
        return Label(int(self.predict(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]))

    @property
    def root(self) -> TreeNode:
        return self._node(0)

    def _node(self, i: int) -> TreeNode:
        counts = (int(self.counts[i, 0]), int(self.counts[i, 1]))
        g = gini(counts)
        if self.feature[i] < 0:
            return Leaf(counts, Label(int(counts[1] > counts[0])), g)
        return Split(
            int(self.feature[i]),
            float(self.threshold[i]),
            self._node(int(self.left[i])),
            self._node(int(self.right[i])),
            counts,
            g,
        )

    # -- serialization -------------------------------------------------

    def to_record(self) -> dict:
        def rec(i):
            out = {"counts": [int(self.counts[i, 0]), int(self.counts[i, 1])]}
            if self.feature[i] >= 0:
                out["feature"] = int(self.feature[i])
                out["threshold"] = float(self.threshold[i])
                out["left"] = rec(int(self.left[i]))
                out["right"] = rec(int(self.right[i]))
            return out

        return rec(0)

    @classmethod
    def from_record(cls, record: dict, n_features: int, max_depth=None) -> "DecisionTree":
        feature, threshold, left, right, counts = [], [], [], [], []

        def add(r):
            i = len(feature)
            feature.append(r.get("feature", -1))
            threshold.append(r.get("threshold", 0.0))
            left.append(-1)
            right.append(-1)
            counts.append(r["counts"])
            if "feature" in r:
                left[i] = add(r["left"])
                right[i] = add(r["right"])
            return i

        add(record)
        return cls(feature, threshold, left, right, counts, n_features, max_depth)

    def structurally_equal(self, other: "DecisionTree") -> bool:
        return (
            np.array_equal(self.feature, other.feature)
            and np.array_equal(self.threshold, other.threshold)
            and np.array_equal(self.left, other.left)
            and np.array_equal(self.right, other.right)
            and np.array_equal(self.counts, other.counts)
        )


def fit_tree(
    X,
    y,
    max_depth: Optional[int] = None,
    min_samples_split: int = 2,
    feature_subsample: Optional[int] = None,
    seed: int = 0,
    sample_weight=None,
) -> DecisionTree:
    """Grow a CART tree.

    ``feature_subsample`` is the number of candidate features drawn per node
    (all features, in index order, when ``None``). ``sample_weight`` holds
    non-negative integer multiplicities, as produced by bootstrapping.
    """
    X, y = _as_xy(X, y)
    if max_depth is not None and max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    d = X.shape[1]
    if sample_weight is None:
        w = np.ones(len(y), dtype=np.int64)
    else:
        w = np.asarray(sample_weight, dtype=np.int64)
        if w.shape != y.shape or np.any(w < 0):
            raise ValueError("sample_weight must be non-negative and match y")
        keep = w > 0
        if not keep.any():
            raise ValueError("all sample weights are zero")
        X, y, w = np.ascontiguousarray(X[keep]), y[keep], w[keep]
    k = d if feature_subsample is None else int(feature_subsample)
    if k < 1:
        raise ValueError("feature_subsample must be >= 1")
    feature, threshold, left, right, counts, _, _ = build_tree(
        X,
        y,
        w,
        -1 if max_depth is None else int(max_depth),
        int(min_samples_split),
        k,
        np.uint32(seed),
    )
    return DecisionTree(feature, threshold, left, right, counts, d, max_depth)


def predict_tree(tree: DecisionTree, x) -> Label:
    return tree.predict_one(x)
