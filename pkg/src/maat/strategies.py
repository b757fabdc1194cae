"""Threshold-based labeling strategies and per-date optimal-threshold search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Protocol, Tuple, runtime_checkable

from .forest.metrics import ConfusionCounts, mcc
from .reports import GroundTruth, Label, MissingReportError, ScanReport, Snapshot, Verdict, verdict_of

DEFAULT_T_MAX = 60

DREBIN_SCANNERS = frozenset(
    {
        "AntiVir",
        "AVG",
        "BitDefender",
        "ClamAV",
        "ESET",
        "F-Secure",
        "Kaspersky",
        "McAfee",
        "Panda",
        "Sophos",
    }
)


@runtime_checkable
class LabelingStrategy(Protocol):
    name: str

    def label(self, report: ScanReport) -> Label: ...


def label_count_threshold(report: ScanReport, t: int) -> Label:
    if t < 1:
        raise ValueError("count threshold must be >= 1")
    return Label.MALICIOUS if report.positives >= t else Label.BENIGN


def label_percent_threshold(report: ScanReport, p: float) -> Label:
    if not 0 < p <= 1:
        raise ValueError("percent threshold must lie in (0, 1]")
    total = report.total
    if total == 0:
        return Label.BENIGN
    return Label.MALICIOUS if report.positives / total >= p else Label.BENIGN


def label_subset_threshold(report: ScanReport, scanners: Iterable[str], t: int) -> Label:
    if t < 1:
        raise ValueError("subset threshold must be >= 1")
    hits = sum(1 for s in set(scanners) if verdict_of(report, s) == Verdict.MALICIOUS)
    return Label.MALICIOUS if hits >= t else Label.BENIGN


@dataclass(frozen=True)
class CountThreshold:
    t: int
    name: str = ""

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("count threshold must be >= 1")
        if not self.name:
            object.__setattr__(self, "name", f"vt>={self.t}")

    def label(self, report: ScanReport) -> Label:
        return label_count_threshold(report, self.t)

    def to_descriptor(self) -> dict:
        return {"kind": "count", "t": self.t}


@dataclass(frozen=True)
class PercentThreshold:
    p: float
    name: str = ""

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError("percent threshold must lie in (0, 1]")
        if not self.name:
            object.__setattr__(self, "name", f"vt>={self.p * 100:g}%")

    def label(self, report: ScanReport) -> Label:
        return label_percent_threshold(report, self.p)

    def to_descriptor(self) -> dict:
        return {"kind": "percent", "p": self.p}


@dataclass(frozen=True)
class SubsetThreshold:
    scanners: FrozenSet[str]
    t: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scanners", frozenset(self.scanners))
        if self.t < 1 or self.t > len(self.scanners):
            raise ValueError("subset threshold must satisfy 1 <= t <= |scanners|")
        if not self.name:
            name = "drebin" if self.scanners == DREBIN_SCANNERS and self.t == 2 else (
                f"subset{len(self.scanners)}>={self.t}"
            )
            object.__setattr__(self, "name", name)

    def label(self, report: ScanReport) -> Label:
        return label_subset_threshold(report, self.scanners, self.t)

    def to_descriptor(self) -> dict:
        return {"kind": "subset", "scanners": sorted(self.scanners), "t": self.t}


def drebin_strategy() -> SubsetThreshold:
    return SubsetThreshold(DREBIN_SCANNERS, 2, name="drebin")


def confusion(snapshot: Snapshot, gt: GroundTruth, labels: Dict[str, Label]) -> ConfusionCounts:
    """Confusion counts of ``labels`` against ``gt`` over the apps of ``gt``."""
    tp = fp = tn = fn = 0
    for app_id, truth in gt.labels.items():
        if app_id not in labels:
            raise MissingReportError(f"no label for ground-truth app {app_id} on {snapshot.date}")
        pred = labels[app_id]
        if truth == Label.MALICIOUS:
            if pred == Label.MALICIOUS:
                tp += 1
            else:
                fn += 1
        elif pred == Label.MALICIOUS:
            fp += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, tn, fn)


def brute_force_threshold(
    snapshot: Snapshot, gt: GroundTruth, t_max: int = DEFAULT_T_MAX
) -> Tuple[int, float]:
    """Exhaustively score vt>=t for t = 1..t_max; return (best t, its MCC).

    Ties go to the smallest threshold.
    """
    if len(gt) == 0:
        raise ValueError("ground truth is empty")
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    positives = {}
    for app_id in gt:
        rep = snapshot.reports.get(app_id)
        if rep is None:
            raise MissingReportError(f"no report for {app_id} in snapshot {snapshot.date}")
        positives[app_id] = rep.positives
    best_t, best = 1, -math.inf
    for t in range(1, t_max + 1):
        labels = {a: Label.MALICIOUS if p >= t else Label.BENIGN for a, p in positives.items()}
        score = mcc(confusion(snapshot, gt, labels))
        if score > best:
            best_t, best = t, score
    return best_t, best
