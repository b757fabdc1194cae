"""Training forest-backed labeling strategies from a labelled scan-report corpus."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import date
from enum import Enum
from typing import Iterable, List, Optional, Tuple

import numpy as np

from ..features import (
    DEFAULT_IMPORTANCE_CUTOFF,
    FeatureSchema,
    Provenance,
    build_engineered_schema,
    build_naive_schema,
    column_indices,
    extract_matrix,
    select_features,
)
from ..forest import GridSearchConfig, RandomForest, grid_search
from ..reports import GroundTruth, Label, MaatError, PathLike, ScanReport, TimeSeriesCorpus, parse_date
from ..scanners import DEFAULT_CERTAINTY_CUTOFF, DEFAULT_CORRECTNESS_CUTOFF, ScannerSets, trusted_scanners

logger = logging.getLogger(__name__)


class FeatureSet(str, Enum):
    NAIVE = "naive"
    NAIVE_SELECTED = "naive_selected"
    ENGINEERED = "engineered"
    ENGINEERED_SELECTED = "engineered_selected"

    @property
    def provenance(self) -> Provenance:
        return Provenance.NAIVE if self.value.startswith("naive") else Provenance.ENGINEERED

    @property
    def selected(self) -> bool:
        return self.value.endswith("_selected")

    @classmethod
    def parse(cls, text: str) -> "FeatureSet":
        aliases = {"naive-sel": "naive_selected", "eng": "engineered", "eng-sel": "engineered_selected"}
        return cls(aliases.get(text, text.replace("-", "_")))


@dataclass
class ForestStrategy:
    """A trained forest plus the schema its feature vectors follow."""

    forest: RandomForest
    schema: FeatureSchema
    feature_kind: FeatureSet
    trained_on: Tuple[date, date]
    name: str = ""

    def __post_init__(self):
        if self.schema.provenance != self.feature_kind.provenance:
            raise ValueError("schema provenance does not match the feature kind")
        if not self.name:
            self.name = f"forest-{self.feature_kind.value}"

    def vectors(self, reports: Iterable[ScanReport], as_of: Optional[date] = None) -> np.ndarray:
        return extract_matrix(reports, self.schema, as_of)

    def label_many(self, reports: List[ScanReport], as_of: Optional[date] = None) -> List[Label]:
        if not reports:
            return []
        return [Label(int(v)) for v in self.forest.predict(self.vectors(reports, as_of))]

    def label(self, report: ScanReport, as_of: Optional[date] = None) -> Label:
        return self.label_many([report], as_of)[0]

    def to_json(self) -> dict:
        out = self.forest.to_json()
        out["schema"] = self.schema.to_json()
        out["feature_kind"] = self.feature_kind.value
        out["trained_on"] = [d.isoformat() for d in self.trained_on]
        out["name"] = self.name
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def save(self, path: PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def from_json(cls, obj: dict) -> "ForestStrategy":
        forest = RandomForest.from_json(obj)
        start, end = (parse_date(d) for d in obj["trained_on"])
        return cls(forest, forest.schema, FeatureSet(obj["feature_kind"]), (start, end), obj.get("name", ""))

    @classmethod
    def load(cls, path: PathLike) -> "ForestStrategy":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def training_rows(
    corpus: TimeSeriesCorpus, gt: GroundTruth, schema: FeatureSchema
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorize every ground-truth app in every snapshot, each as of its snapshot date."""
    blocks, labels = [], []
    ids = sorted(gt.labels)
    for snap in corpus.snapshots:
        reps = [snap.reports[a] for a in ids if a in snap.reports]
        if not reps:
            continue
        blocks.append(extract_matrix(reps, schema, snap.date))
        labels.extend(int(gt[r.app_id]) for r in reps)
    if not blocks:
        raise MaatError("no ground-truth app appears in the corpus")
    return np.vstack(blocks), np.array(labels, dtype=np.int64)


def train_strategy(
    corpus: TimeSeriesCorpus,
    gt: GroundTruth,
    feature_kind,
    config: GridSearchConfig = GridSearchConfig(),
    importance_cutoff: float = DEFAULT_IMPORTANCE_CUTOFF,
    correctness_cutoff: float = DEFAULT_CORRECTNESS_CUTOFF,
    certainty_cutoff: float = DEFAULT_CERTAINTY_CUTOFF,
    jobs: int = 1,
) -> ForestStrategy:
    """Run the training pipeline: trusted scanners (engineered kinds only),
    schema and extraction, optional importance-based selection, and grid search."""
    kind = FeatureSet(feature_kind)
    if len(gt.classes()) < 2:
        raise MaatError("ground truth must contain both malicious and benign apps")
    if kind.provenance == Provenance.NAIVE:
        schema = build_naive_schema(corpus)
    else:
        sets: ScannerSets = trusted_scanners(corpus, gt, correctness_cutoff, certainty_cutoff)
        logger.info("trusted scanners: %s", sorted(sets.trusted))
        schema = build_engineered_schema(corpus, sets.trusted)

    X, y = training_rows(corpus, gt, schema)
    if len(np.unique(y)) < 2:
        raise MaatError("training rows contain a single class")
    if kind.selected:
        sub = select_features(X, y, schema, importance_cutoff, config.seed)
        if len(sub) == 0:
            raise MaatError("feature selection kept no features")
        X = X[:, column_indices(schema, sub)]
        schema = sub
        logger.info("selected %d features: %s", len(schema), schema.names)

    result = grid_search(X, y, config, schema=schema, jobs=jobs)
    logger.info("grid search scores: %s -> %s", result.scores, result.best_params)
    dates = corpus.dates
    return ForestStrategy(result.forest, schema, kind, (dates[0], dates[-1]))
