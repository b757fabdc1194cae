"""Time-series evaluation of labeling strategies against ground truth."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from typing import Dict, List, Optional, Sequence

from ..forest.metrics import ConfusionCounts, mcc
from ..reports import GroundTruth, Label, MissingReportError, PathLike, Snapshot, TimeSeriesCorpus, parse_date
from ..strategies import DEFAULT_T_MAX, CountThreshold, brute_force_threshold, confusion


@dataclass(frozen=True)
class EvalRow:
    strategy: str
    date: date
    counts: ConfusionCounts
    mcc: float

    def as_csv_row(self) -> list:
        c = self.counts
        return [self.strategy, self.date.isoformat(), c.tp, c.fp, c.tn, c.fn, repr(self.mcc)]


EVAL_HEADER = ["strategy", "date", "tp", "fp", "tn", "fn", "mcc"]


@dataclass(frozen=True)
class BestThreshold:
    """Per-date optimal count threshold found on the evaluation ground truth itself."""

    t_max: int = DEFAULT_T_MAX
    name: str = "best"


@dataclass(frozen=True)
class BruteForceThreshold:
    """Count threshold re-tuned per date on a separate reference corpus.

    For an evaluation date the reference snapshot used is the latest one on
    or before it (the earliest one when none precedes it).
    """

    reference: TimeSeriesCorpus
    reference_gt: GroundTruth
    t_max: int = DEFAULT_T_MAX
    name: str = "bruteforce"

    def threshold_for(self, when: date) -> int:
        snaps = self.reference.snapshots
        ref = snaps[0]
        for s in snaps:
            if s.date <= when:
                ref = s
        t, _ = brute_force_threshold(ref, present_truth(ref, self.reference_gt), self.t_max)
        return t


def present_truth(snapshot: Snapshot, gt: GroundTruth) -> GroundTruth:
    """Ground truth restricted to the apps that have a report in ``snapshot``."""
    return gt.subset([a for a in gt if a in snapshot.reports])


def apply_strategy(strategy, snapshot: Snapshot, as_of: Optional[date] = None) -> Dict[str, Label]:
    """Label every report in ``snapshot``.

    ``as_of`` defaults to the snapshot date and only matters for strategies
    whose features depend on report age.
    """
    when = snapshot.date if as_of is None else as_of
    ids = sorted(snapshot.reports)
    reports = [snapshot.reports[a] for a in ids]
    if hasattr(strategy, "label_many"):
        labels = strategy.label_many(reports, when)
    else:
        labels = [strategy.label(r) for r in reports]
    return dict(zip(ids, labels))


def _row(name: str, snap: Snapshot, gt: GroundTruth, labels: Dict[str, Label]) -> EvalRow:
    c = confusion(snap, gt, labels)
    return EvalRow(name, snap.date, c, mcc(c))


def timeseries_eval(strategies: Sequence, corpus: TimeSeriesCorpus, gt: GroundTruth) -> List[EvalRow]:
    """One row per (strategy, snapshot), in strategy-major order.

    Only ground-truth apps are scored, each at the dates where it has a report.
    """
    if not strategies:
        raise ValueError("no strategies to evaluate")
    rows = []
    for strat in strategies:
        for snap in corpus.snapshots:
            scored = Snapshot(snap.date, {a: snap.reports[a] for a in gt if a in snap.reports})
            truth = present_truth(snap, gt)
            if not len(truth):
                raise MissingReportError(f"no ground-truth app has a report on {snap.date}")
            if isinstance(strat, BestThreshold):
                t, _ = brute_force_threshold(scored, truth, strat.t_max)
                labels = apply_strategy(CountThreshold(t), scored)
            elif isinstance(strat, BruteForceThreshold):
                labels = apply_strategy(CountThreshold(strat.threshold_for(snap.date)), scored)
            else:
                labels = apply_strategy(strat, scored)
            rows.append(_row(strat.name, scored, truth, labels))
    return rows


def write_eval_csv(rows: Sequence[EvalRow], path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_HEADER)
        for r in rows:
            w.writerow(r.as_csv_row())


def read_eval_csv(path: PathLike) -> List[EvalRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            EvalRow(
                r["strategy"],
                parse_date(r["date"]),
                ConfusionCounts(int(r["tp"]), int(r["fp"]), int(r["tn"]), int(r["fn"])),
                float(r["mcc"]),
            )
            for r in csv.DictReader(fh)
        ]
