"""Scan-report domain types and the line-delimited JSON ingestion format."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import date
from enum import IntEnum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DAYS_PER_YEAR = 365.25


class MaatError(Exception):
    """Base class for data errors raised by this package."""


class ReportParseError(MaatError):
    pass


class ConsistencyError(MaatError):
    pass


class MissingReportError(MaatError):
    pass


class Verdict(IntEnum):
    NOT_SCANNED = -1
    BENIGN = 0
    MALICIOUS = 1


class Label(IntEnum):
    BENIGN = 0
    MALICIOUS = 1

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown label {text!r}") from None

    def __str__(self) -> str:
        return self.name.lower()


def parse_date(text: Union[str, date]) -> date:
    if isinstance(text, date):
        return text
    return date.fromisoformat(text)


@dataclass(frozen=True)
class ScannerResult:
    detected: bool
    raw_label: Optional[str] = None
    version: Optional[str] = None

    @property
    def verdict(self) -> Verdict:
        return Verdict.MALICIOUS if self.detected else Verdict.BENIGN


@dataclass(frozen=True)
class ScanReport:
    """One app's scan snapshot.

    ``positives`` and ``total`` are derived from ``scans``; pass them explicitly
    only when validating stored values (see :func:`report_from_record`).
    """

    app_id: str
    scan_date: date
    first_seen: date
    times_submitted: int
    scans: Mapping[str, ScannerResult]
    permissions: FrozenSet[str] = frozenset()
    tags: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if self.times_submitted < 1:
            raise ConsistencyError(f"{self.app_id}: times_submitted must be >= 1")
        if self.first_seen > self.scan_date:
            raise ConsistencyError(f"{self.app_id}: first_seen after scan_date")
        object.__setattr__(self, "permissions", frozenset(self.permissions))
        object.__setattr__(self, "tags", frozenset(self.tags))

    @property
    def positives(self) -> int:
        return sum(1 for r in self.scans.values() if r.detected)

    @property
    def total(self) -> int:
        return len(self.scans)

    def to_record(self) -> dict:
        scans = {}
        for name in sorted(self.scans):
            res = self.scans[name]
            entry: dict = {"detected": res.detected}
            if res.raw_label is not None:
                entry["raw_label"] = res.raw_label
            if res.version is not None:
                entry["version"] = res.version
            scans[name] = entry
        return {
            "app_id": self.app_id,
            "scan_date": self.scan_date.isoformat(),
            "first_seen": self.first_seen.isoformat(),
            "times_submitted": self.times_submitted,
            "positives": self.positives,
            "total": self.total,
            "scans": scans,
            "permissions": sorted(self.permissions),
            "tags": sorted(self.tags),
        }


def report_from_record(rec: dict) -> ScanReport:
    """Build a report from a decoded JSON record, cross-checking positives/total."""
    try:
        app_id = rec["app_id"]
        scans = {
            name: ScannerResult(
                detected=bool(entry["detected"]),
                raw_label=entry.get("raw_label"),
                version=entry.get("version"),
            )
            for name, entry in rec["scans"].items()
        }
        report = ScanReport(
            app_id=app_id,
            scan_date=parse_date(rec["scan_date"]),
            first_seen=parse_date(rec["first_seen"]),
            times_submitted=int(rec["times_submitted"]),
            scans=scans,
            permissions=frozenset(rec.get("permissions", ())),
            tags=frozenset(rec.get("tags", ())),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ReportParseError(f"bad report record: {exc!r}") from exc
    if "positives" in rec and int(rec["positives"]) != report.positives:
        raise ConsistencyError(
            f"{app_id}: stored positives={rec['positives']} but scans has {report.positives} detections"
        )
    if "total" in rec and int(rec["total"]) != report.total:
        raise ConsistencyError(
            f"{app_id}: stored total={rec['total']} but scans has {report.total} entries"
        )
    return report


def verdict_of(report: ScanReport, scanner: str) -> Verdict:
    res = report.scans.get(scanner)
    if res is None:
        return Verdict.NOT_SCANNED
    return res.verdict


def report_age_years(report: ScanReport, as_of: date) -> float:
    if as_of < report.first_seen:
        raise ValueError(
            f"{report.app_id}: as_of {as_of} precedes first_seen {report.first_seen}"
        )
    return (as_of - report.first_seen).days / DAYS_PER_YEAR


@dataclass(frozen=True)
class Snapshot:
    date: date
    reports: Mapping[str, ScanReport]

    def __post_init__(self):
        for app_id, rep in self.reports.items():
            if rep.app_id != app_id:
                raise ConsistencyError(f"report keyed as {app_id} has app_id {rep.app_id}")
            if rep.scan_date > self.date:
                raise ConsistencyError(
                    f"{app_id}: scan_date {rep.scan_date} after snapshot date {self.date}"
                )

    @classmethod
    def from_reports(cls, when: date, reports: Iterable[ScanReport]) -> "Snapshot":
        out: Dict[str, ScanReport] = {}
        for rep in reports:
            if rep.app_id in out:
                raise ConsistencyError(f"duplicate report for {rep.app_id}")
            out[rep.app_id] = rep
        return cls(when, out)

    def scanner_names(self) -> set:
        names = set()
        for rep in self.reports.values():
            names.update(rep.scans)
        return names

    def __len__(self) -> int:
        return len(self.reports)


@dataclass(frozen=True)
class TimeSeriesCorpus:
    snapshots: tuple

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        object.__setattr__(self, "snapshots", snaps)
        if not snaps:
            raise ConsistencyError("corpus has no snapshots")
        for a, b in zip(snaps, snaps[1:]):
            if not a.date < b.date:
                raise ConsistencyError(f"snapshot dates not increasing: {a.date} then {b.date}")
        if not self.app_ids():
            raise ConsistencyError("corpus contains no apps")

    @property
    def dates(self) -> List[date]:
        return [s.date for s in self.snapshots]

    def app_ids(self) -> set:
        ids = set()
        for snap in self.snapshots:
            ids.update(snap.reports)
        return ids

    def scanner_names(self) -> List[str]:
        names = set()
        for snap in self.snapshots:
            names |= snap.scanner_names()
        return sorted(names)

    def until(self, last: date) -> "TimeSeriesCorpus":
        return TimeSeriesCorpus(tuple(s for s in self.snapshots if s.date <= last))

    def subset(self, app_ids: Iterable[str]) -> "TimeSeriesCorpus":
        keep = set(app_ids)
        return TimeSeriesCorpus(
            tuple(
                Snapshot(s.date, {a: r for a, r in s.reports.items() if a in keep})
                for s in self.snapshots
            )
        )

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]


@dataclass(frozen=True)
class GroundTruth:
    labels: Mapping[str, Label] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, app_id: str) -> Label:
        return self.labels[app_id]

    def __contains__(self, app_id) -> bool:
        return app_id in self.labels

    def __iter__(self):
        return iter(self.labels)

    def classes(self) -> set:
        return set(self.labels.values())

    def subset(self, app_ids: Iterable[str]) -> "GroundTruth":
        return GroundTruth({a: self.labels[a] for a in app_ids})


# -- file formats ---------------------------------------------------------


def load_snapshot(path: PathLike, when: Union[str, date]) -> Snapshot:
    """Read a line-delimited JSON snapshot file.

    Blank lines are skipped. Raises :class:`ReportParseError` (with the line
    number) for malformed lines and :class:`ConsistencyError` when a stored
    ``positives``/``total`` disagrees with the ``scans`` map.
    """
    when = parse_date(when)
    reports = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReportParseError(f"{path}:{lineno}: {exc.msg}") from exc
            if not isinstance(rec, dict):
                raise ReportParseError(f"{path}:{lineno}: record is not an object")
            try:
                reports.append(report_from_record(rec))
            except ReportParseError as exc:
                raise ReportParseError(f"{path}:{lineno}: {exc}") from exc
    return Snapshot.from_reports(when, reports)


def write_snapshot(snapshot: Snapshot, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for app_id in sorted(snapshot.reports):
            fh.write(json.dumps(snapshot.reports[app_id].to_record(), sort_keys=True))
            fh.write("\n")


def load_corpus(manifest: PathLike) -> TimeSeriesCorpus:
    """Load every snapshot listed in a corpus manifest.

    Relative snapshot paths are resolved against the manifest's directory.
    """
    manifest = Path(manifest)
    try:
        entries = json.loads(manifest.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ReportParseError(f"{manifest}: {exc.msg}") from exc
    snaps = []
    for entry in entries:
        p = Path(entry["path"])
        if not p.is_absolute():
            p = manifest.parent / p
        snaps.append(load_snapshot(p, entry["date"]))
    return TimeSeriesCorpus(tuple(snaps))


def write_corpus(corpus: TimeSeriesCorpus, directory: PathLike) -> Path:
    """Write snapshots plus ``manifest.json`` into ``directory``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for snap in corpus.snapshots:
        name = f"snapshot_{snap.date.isoformat()}.jsonl"
        write_snapshot(snap, directory / name)
        entries.append({"date": snap.date.isoformat(), "path": name})
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
    return manifest


def load_ground_truth(path: PathLike) -> GroundTruth:
    labels: Dict[str, Label] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"app_id", "label"} <= set(reader.fieldnames):
            raise ReportParseError(f"{path}: expected header 'app_id,label'")
        for lineno, row in enumerate(reader, 2):
            app_id = row["app_id"]
            if app_id in labels:
                raise ConsistencyError(f"{path}:{lineno}: duplicate app_id {app_id}")
            try:
                labels[app_id] = Label.parse(row["label"])
            except ValueError as exc:
                raise ReportParseError(f"{path}:{lineno}: {exc}") from exc
    return GroundTruth(labels)


def write_ground_truth(gt: GroundTruth, path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["app_id", "label"])
        for app_id in sorted(gt.labels):
            writer.writerow([app_id, str(gt.labels[app_id])])
