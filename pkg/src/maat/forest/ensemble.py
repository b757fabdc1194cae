"""Random forests of CART trees with seeded, schedule-independent training."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, List, Optional

import numpy as np

from ..reports import Label
from .tree import DecisionTree, _as_xy, fit_tree

MODEL_VERSION = "maat-forest/1"


def derive_seed(seed: int, *index: int) -> int:
    """32-bit seed for the stream identified by ``(seed, *index)``."""
    return int(np.random.SeedSequence([seed, *index]).generate_state(1)[0])


def sqrt_features(d: int) -> int:
    return max(1, math.ceil(math.sqrt(d)))


def _map(fn, items, jobs: int):
    if jobs is None or jobs <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


class RandomForest:
    def __init__(self, trees: List[DecisionTree], seed: int, hyperparams: dict, schema: Any = None):
        if not trees:
            raise ValueError("a forest needs at least one tree")
        self.trees = list(trees)
        self.seed = seed
        self.hyperparams = dict(hyperparams)
        self.schema = schema

    @property
    def n_estimators(self) -> int:
        return len(self.trees)

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    @property
    def importances(self) -> np.ndarray:
        return np.mean([t.importances for t in self.trees], axis=0)

    def votes(self, X) -> np.ndarray:
        X = _as_xy(X)
        v = np.zeros(X.shape[0], dtype=np.int64)
        for t in self.trees:
            v += t.predict(X)
        return v

    def predict(self, X) -> np.ndarray:
        # strict majority; an even split goes to benign
        return (2 * self.votes(X) > self.n_estimators).astype(np.int64)

    def predict_one(self, x) -> Label:
        return Label(int(self.predict(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]))

    def to_json(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "schema": self.schema.to_json() if self.schema is not None else None,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
            "n_features": self.n_features,
            "trees": [t.to_record() for t in self.trees],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict) -> "RandomForest":
        if obj.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {obj.get('version')!r}")
        schema = None
        if obj.get("schema") is not None:
            from ..features import FeatureSchema

            schema = FeatureSchema.from_json(obj["schema"])
        hp = obj.get("hyperparams", {})
        trees = [
            DecisionTree.from_record(r, obj["n_features"], hp.get("max_depth"))
            for r in obj["trees"]
        ]
        return cls(trees, obj.get("seed"), hp, schema)

    @classmethod
    def loads(cls, text: str) -> "RandomForest":
        return cls.from_json(json.loads(text))


def fit_forest(
    X,
    y,
    n_estimators: int = 100,
    max_depth: Optional[int] = None,
    seed: int = 0,
    min_samples_split: int = 2,
    max_features: Optional[int] = None,
    schema: Any = None,
    jobs: int = 1,
) -> RandomForest:
    """Bagged CART trees; tree ``i`` draws its bootstrap and feature subsets
    from streams derived from ``(seed, i)`` so results do not depend on ``jobs``.

    ``max_features`` defaults to ceil(sqrt(d)).
    """
    X, y = _as_xy(X, y)
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    n, d = X.shape
    k = sqrt_features(d) if max_features is None else max_features

    def grow(i):
        rng = np.random.default_rng([seed, i])
        w = np.bincount(rng.integers(0, n, n), minlength=n)
        kseed = int(rng.integers(0, 2**32))
        return fit_tree(X, y, max_depth, min_samples_split, k, kseed, sample_weight=w)

    trees = _map(grow, range(n_estimators), jobs)
    hp = {
        "n_estimators": n_estimators,
        "max_depth": max_depth,
        "min_samples_split": min_samples_split,
        "max_features": k,
    }
    return RandomForest(trees, seed, hp, schema)
