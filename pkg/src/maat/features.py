"""Naive and engineered feature vectors extracted from scan reports."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .forest.tree import fit_tree
from .reports import Label, PathLike, ScanReport, TimeSeriesCorpus, report_age_years

logger = logging.getLogger(__name__)

DEFAULT_IMPORTANCE_CUTOFF = 1e-5

REPORT_ATTRS = ("age_years", "times_submitted", "positives", "total")


class FeatureKind(str, Enum):
    SCANNER_VERDICT = "scanner_verdict"
    REPORT_ATTR = "report_attr"
    PERMISSION = "permission"
    TAG = "tag"


class Provenance(str, Enum):
    NAIVE = "naive"
    ENGINEERED = "engineered"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered, uniquely named feature columns.

    Engineered schemas compute report age relative to the date passed at
    extraction time (the snapshot date while training, the labeling date
    at inference).
    """

    entries: Tuple[Tuple[str, FeatureKind], ...]
    provenance: Provenance

    def __post_init__(self):
        entries = tuple((str(n), FeatureKind(k)) for n, k in self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        keys = [(k, n) for n, k in entries]
        if len(set(keys)) != len(keys):
            raise ValueError("feature names must be unique")

    @property
    def names(self) -> List[str]:
        # permissions and tags could collide with scanner names; prefix them for display
        out = []
        for n, k in self.entries:
            if k == FeatureKind.PERMISSION:
                out.append(f"perm:{n}")
            elif k == FeatureKind.TAG:
                out.append(f"tag:{n}")
            else:
                out.append(n)
        return out

    def __len__(self) -> int:
        return len(self.entries)

    def subset(self, keep: Sequence[int]) -> "FeatureSchema":
        keep = sorted(set(int(i) for i in keep))
        return FeatureSchema(tuple(self.entries[i] for i in keep), self.provenance)

    def to_json(self) -> dict:
        return {
            "provenance": self.provenance.value,
            "entries": [{"name": n, "kind": k.value} for n, k in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureSchema":
        return cls(
            tuple((e["name"], FeatureKind(e["kind"])) for e in obj["entries"]),
            Provenance(obj["provenance"]),
        )


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    label: Optional[Label] = None


def build_naive_schema(corpus: TimeSeriesCorpus) -> FeatureSchema:
    names = corpus.scanner_names()
    if not names:
        raise ValueError("no scanner names found in corpus")
    return FeatureSchema(tuple((n, FeatureKind.SCANNER_VERDICT) for n in names), Provenance.NAIVE)


def build_engineered_schema(corpus: TimeSeriesCorpus, trusted: Iterable[str]) -> FeatureSchema:
    trusted = sorted(set(trusted))
    if not trusted:
        logger.warning("no trusted scanners; engineered schema has no scanner-verdict features")
    perms, tags = set(), set()
    for snap in corpus.snapshots:
        for rep in snap.reports.values():
            perms |= rep.permissions
            tags |= rep.tags
    entries = [(s, FeatureKind.SCANNER_VERDICT) for s in trusted]
    entries += [(a, FeatureKind.REPORT_ATTR) for a in REPORT_ATTRS]
    entries += [(p, FeatureKind.PERMISSION) for p in sorted(perms)]
    entries += [(t, FeatureKind.TAG) for t in sorted(tags)]
    return FeatureSchema(tuple(entries), Provenance.ENGINEERED)


def _verdict_code(report: ScanReport, scanner: str) -> int:
    res = report.scans.get(scanner)
    if res is None:
        return -1
    return 1 if res.detected else 0


def extract_naive(report: ScanReport, schema: FeatureSchema) -> FeatureVector:
    if schema.provenance != Provenance.NAIVE:
        raise ValueError("extract_naive needs a naive schema")
    return FeatureVector(np.array([_verdict_code(report, n) for n, _ in schema.entries], dtype=np.float64))


def _attr(report: ScanReport, name: str, as_of: date) -> float:
    if name == "age_years":
        return report_age_years(report, as_of)
    if name == "times_submitted":
        return float(report.times_submitted)
    if name == "positives":
        return float(report.positives)
    if name == "total":
        return float(report.total)
    raise ValueError(f"unknown report attribute {name!r}")


def extract_engineered(report: ScanReport, schema: FeatureSchema, as_of: date) -> FeatureVector:
    if schema.provenance != Provenance.ENGINEERED:
        raise ValueError("extract_engineered needs an engineered schema")
    vals = np.empty(len(schema), dtype=np.float64)
    for i, (name, kind) in enumerate(schema.entries):
        if kind == FeatureKind.SCANNER_VERDICT:
            vals[i] = _verdict_code(report, name)
        elif kind == FeatureKind.REPORT_ATTR:
            vals[i] = _attr(report, name, as_of)
        elif kind == FeatureKind.PERMISSION:
            vals[i] = 1.0 if name in report.permissions else 0.0
        else:
            vals[i] = 1.0 if name in report.tags else 0.0
    return FeatureVector(vals)


def extract(report: ScanReport, schema: FeatureSchema, as_of: Optional[date] = None) -> FeatureVector:
    if schema.provenance == Provenance.NAIVE:
        return extract_naive(report, schema)
    return extract_engineered(report, schema, as_of if as_of is not None else report.scan_date)


def extract_matrix(reports: Iterable[ScanReport], schema: FeatureSchema, as_of: Optional[date] = None) -> np.ndarray:
    rows = [extract(r, schema, as_of).values for r in reports]
    if not rows:
        return np.empty((0, len(schema)))
    return np.vstack(rows)


def select_features(
    X,
    y,
    schema: FeatureSchema,
    importance_cutoff: float = DEFAULT_IMPORTANCE_CUTOFF,
    seed: int = 0,
) -> FeatureSchema:
    """Sub-schema (original order) of the columns whose single-tree importance
    exceeds ``importance_cutoff``."""
    X = np.asarray([v.values if isinstance(v, FeatureVector) else v for v in X], dtype=np.float64)
    y = np.asarray([int(v) for v in y], dtype=np.int64)
    if len(X) != len(y) or len(y) < 2:
        raise ValueError("need at least two labelled rows")
    if len(np.unique(y)) < 2:
        raise ValueError("feature selection needs both classes")
    if X.shape[1] != len(schema):
        raise ValueError("feature matrix does not match schema")
    tree = fit_tree(X, y, max_depth=None, seed=seed)
    return schema.subset(np.flatnonzero(tree.importances > importance_cutoff))


def column_indices(schema: FeatureSchema, sub: FeatureSchema) -> np.ndarray:
    pos = {e: i for i, e in enumerate(schema.entries)}
    return np.array([pos[e] for e in sub.entries], dtype=np.int64)


def write_feature_csv(path: PathLike, schema: FeatureSchema, X, labels=None, app_ids=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = (["app_id"] if app_ids is not None else []) + schema.names
        if labels is not None:
            header.append("label")
        w.writerow(header)
        for i, row in enumerate(np.asarray(X)):
            out = [app_ids[i]] if app_ids is not None else []
            out += [repr(float(v)) for v in row]
            if labels is not None:
                out.append(str(Label(int(labels[i]))))
            w.writerow(out)


def write_vectors_csv(path: PathLike, app_ids: Sequence[str], names: Sequence[str], X) -> None:
    """Write downstream vectors: ``app_id`` first, then one column per feature."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (len(app_ids), len(names)):
        raise ValueError("matrix shape does not match app ids and feature names")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["app_id", *names])
        for app_id, row in zip(app_ids, X):
            w.writerow([app_id, *(repr(float(v)) for v in row)])


def read_vectors_csv(path: PathLike) -> Tuple[List[str], List[str], np.ndarray]:
    """Read a downstream vector CSV (``app_id`` first, features after).

    Returns (app_ids, feature names, matrix).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "app_id":
            raise ValueError(f"{path}: first column must be app_id")
        ids, rows = [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
    return ids, header[1:], X
