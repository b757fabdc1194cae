"""Small builders for hand-made reports and corpora."""

from datetime import date, timedelta

from maat.reports import GroundTruth, Label, ScannerResult, ScanReport, Snapshot, TimeSeriesCorpus

D0 = date(2019, 1, 4)


def report(app_id, verdicts, when=D0, first_seen=None, times_submitted=1, permissions=(), tags=()):
    """``verdicts`` maps scanner name to True (detected) or False (clean); absent names are not scanned."""
    return ScanReport(
        app_id=app_id,
        scan_date=when,
        first_seen=first_seen or when,
        times_submitted=times_submitted,
        scans={n: ScannerResult(bool(v)) for n, v in verdicts.items()},
        permissions=frozenset(permissions),
        tags=frozenset(tags),
    )


def counted(app_id, positives, total, when=D0):
    """Report with ``positives`` detections among ``total`` scanners named s00, s01, ..."""
    return report(app_id, {f"s{i:02d}": i < positives for i in range(total)}, when)


def snapshot(reports, when=D0):
    return Snapshot.from_reports(when, reports)


def dates(n, start=D0):
    return [start + timedelta(days=14 * i) for i in range(n)]


def series_corpus(observations, scanner="A", app="app"):
    """One app over len(observations) snapshots; each entry is True, False or None (absent)."""
    snaps = []
    for when, obs in zip(dates(len(observations)), observations):
        verdicts = {} if obs is None else {scanner: obs}
        snaps.append(Snapshot.from_reports(when, [report(app, verdicts, when, first_seen=D0)]))
    return TimeSeriesCorpus(tuple(snaps))


def truth(mapping):
    return GroundTruth({a: Label(int(v)) for a, v in mapping.items()})
