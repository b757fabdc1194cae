"""Scanner correctness and certainty scores over a time-series corpus.

Correctness of a scanner on one snapshot is the fraction of ground-truth apps
it labels correctly (a missing verdict counts as wrong). Certainty of a
scanner on one app is the relative frequency of its most common observation
(malicious, benign or not scanned) across the snapshots that contain the app.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from datetime import date
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .reports import (
    GroundTruth,
    MissingReportError,
    PathLike,
    Snapshot,
    TimeSeriesCorpus,
    Verdict,
    parse_date,
    verdict_of,
)

logger = logging.getLogger(__name__)

DEFAULT_CORRECTNESS_CUTOFF = 0.90
DEFAULT_CERTAINTY_CUTOFF = 0.90


@dataclass(frozen=True)
class CorrectnessSeries:
    scanner: str
    points: Tuple[Tuple[date, float], ...]

    @property
    def overall(self) -> float:
        return _mean([s for _, s in self.points])


@dataclass(frozen=True)
class CertaintyScore:
    scanner: str
    per_app: Dict[str, float]

    @property
    def dataset_mean(self) -> float:
        return _mean(list(self.per_app.values()))


@dataclass(frozen=True)
class ScannerSets:
    correct: frozenset
    stable: frozenset

    @property
    def trusted(self) -> frozenset:
        return self.correct & self.stable

    def to_json(self) -> dict:
        return {
            "correct": sorted(self.correct),
            "stable": sorted(self.stable),
            "trusted": sorted(self.trusted),
        }


def _mean(values: Sequence[float]) -> float:
    # fsum is correctly rounded, so the mean does not depend on summation order
    if not values:
        return 0.0
    return math.fsum(values) / len(values)


def verdict_matrix(snapshot: Snapshot, app_ids: Sequence[str], scanners: Sequence[str]) -> np.ndarray:
    """(apps x scanners) int8 matrix of verdicts; rows for absent apps are all NotScanned."""
    col = {s: j for j, s in enumerate(scanners)}
    out = np.full((len(app_ids), len(scanners)), Verdict.NOT_SCANNED, dtype=np.int8)
    for i, app_id in enumerate(app_ids):
        rep = snapshot.reports.get(app_id)
        if rep is None:
            continue
        row = out[i]
        for name, res in rep.scans.items():
            j = col.get(name)
            if j is not None:
                row[j] = 1 if res.detected else 0
    return out


def correctness_at(snapshot: Snapshot, gt: GroundTruth, scanner: str) -> float:
    if len(gt) == 0:
        raise ValueError("ground truth is empty")
    correct = 0
    for app_id, truth in gt.labels.items():
        rep = snapshot.reports.get(app_id)
        if rep is None:
            raise MissingReportError(f"no report for {app_id} in snapshot {snapshot.date}")
        v = verdict_of(rep, scanner)
        if v != Verdict.NOT_SCANNED and int(v) == int(truth):
            correct += 1
    return correct / len(gt)


def correctness_series(
    corpus: TimeSeriesCorpus, gt: GroundTruth, scanners: Optional[Iterable[str]] = None
) -> Dict[str, CorrectnessSeries]:
    """Per-date correctness for each scanner (all scanners in the corpus by default).

    At each date only the ground-truth apps with a report on that date are
    scored; a date where none has a report is an error.
    """
    if len(gt) == 0:
        raise ValueError("ground truth is empty")
    names = sorted(scanners) if scanners is not None else corpus.scanner_names()
    points: Dict[str, List[Tuple[date, float]]] = {s: [] for s in names}
    for snap in corpus.snapshots:
        ids = sorted(a for a in gt.labels if a in snap.reports)
        if not ids:
            raise MissingReportError(f"no ground-truth app has a report in snapshot {snap.date}")
        truth = np.array([int(gt[a]) for a in ids], dtype=np.int8)
        counts = np.sum(verdict_matrix(snap, ids, names) == truth[:, None], axis=0)
        for s, c in zip(names, counts):
            points[s].append((snap.date, int(c) / len(ids)))
    return {s: CorrectnessSeries(s, tuple(p)) for s, p in points.items()}


def correct_scanners(
    corpus: TimeSeriesCorpus, gt: GroundTruth, cutoff: float = DEFAULT_CORRECTNESS_CUTOFF
) -> set:
    series = correctness_series(corpus, gt)
    return {s for s, ser in series.items() if ser.overall >= cutoff}


def _observations(corpus: TimeSeriesCorpus, scanner: str, app: str) -> List[Verdict]:
    return [verdict_of(snap.reports[app], scanner) for snap in corpus.snapshots if app in snap.reports]


def certainty(corpus: TimeSeriesCorpus, scanner: str, app: str) -> float:
    obs = _observations(corpus, scanner, app)
    if not obs:
        raise MissingReportError(f"app {app} appears in no snapshot")
    counts = {}
    for o in obs:
        counts[o] = counts.get(o, 0) + 1
    return max(counts.values()) / len(obs)


def certainty_scores(
    corpus: TimeSeriesCorpus, scanners: Optional[Iterable[str]] = None
) -> Dict[str, CertaintyScore]:
    names = sorted(scanners) if scanners is not None else corpus.scanner_names()
    app_ids = sorted(corpus.app_ids())
    present = np.zeros(len(app_ids), dtype=np.int64)
    counts = np.zeros((3, len(app_ids), len(names)), dtype=np.int64)
    for snap in corpus.snapshots:
        m = verdict_matrix(snap, app_ids, names)
        here = np.array([a in snap.reports for a in app_ids])
        present += here
        for k, v in enumerate((-1, 0, 1)):
            counts[k] += (m == v) & here[:, None]
    scores = counts.max(axis=0) / present[:, None]
    return {
        s: CertaintyScore(s, {a: float(scores[i, j]) for i, a in enumerate(app_ids)})
        for j, s in enumerate(names)
    }


def stable_scanners(corpus: TimeSeriesCorpus, cutoff: float = DEFAULT_CERTAINTY_CUTOFF) -> set:
    if len(corpus) < 2:
        logger.warning("stability over a single snapshot is vacuous; every scanner counts as stable")
        return set(corpus.scanner_names())
    scores = certainty_scores(corpus)
    return {s for s, c in scores.items() if c.dataset_mean >= cutoff}


def trusted_scanners(
    corpus: TimeSeriesCorpus,
    gt: GroundTruth,
    correctness_cutoff: float = DEFAULT_CORRECTNESS_CUTOFF,
    certainty_cutoff: float = DEFAULT_CERTAINTY_CUTOFF,
) -> ScannerSets:
    correct = correct_scanners(corpus, gt, correctness_cutoff)
    stable = stable_scanners(corpus, certainty_cutoff)
    return ScannerSets(frozenset(correct), frozenset(stable))


def tabulate_correctness(
    corpus: TimeSeriesCorpus, gt: GroundTruth, scanners: Iterable[str]
) -> List[Tuple[str, date, float]]:
    """Rows of (scanner, date, correctness) for every scanner/snapshot pair."""
    scanners = sorted(scanners)
    if not scanners:
        raise ValueError("no scanners to tabulate")
    series = correctness_series(corpus, gt, scanners)
    return [(s, d, score) for s in scanners for d, score in series[s].points]


def write_correctness_csv(rows: Iterable[Tuple[str, date, float]], path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scanner", "date", "correctness"])
        for s, d, score in rows:
            w.writerow([s, d.isoformat(), repr(score)])


def read_correctness_csv(path: PathLike) -> List[Tuple[str, date, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            (row["scanner"], parse_date(row["date"]), float(row["correctness"]))
            for row in csv.DictReader(fh)
        ]


def write_certainty_csv(scores: Dict[str, CertaintyScore], path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scanner", "mean_certainty"])
        for s in sorted(scores):
            w.writerow([s, repr(scores[s].dataset_mean)])


def write_sets_json(sets: ScannerSets, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sets.to_json(), fh, indent=2)
        fh.write("\n")
