import dataclasses
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maat.reports import Label, write_corpus
from maat.scanners import certainty, correctness_series
from maat.simulator import (
    DEFAULT_PERIOD_DAYS,
    ScannerProfile,
    SimConfig,
    SimConfigError,
    app_specs,
    biweekly_dates,
    default_config,
    gaussian_vectors,
    generate_corpus,
    profile_groups,
    snapshot_period_days,
    suppression,
)


def small_config(profiles, n_apps=120, n_snapshots=4, **kw):
    return SimConfig(
        scanners=tuple(profiles),
        n_apps=n_apps,
        malicious_fraction=0.5,
        snapshot_dates=biweekly_dates(date(2019, 1, 4), n_snapshots),
        **kw,
    )


def test_default_config_shape():
    cfg = default_config(42)
    cfg.validate()
    assert len(cfg.scanners) == 60 and cfg.n_apps == 2000 and cfg.malicious_fraction == 0.5
    assert len(cfg.snapshot_dates) == 10 and cfg.q0 == 0.8 and cfg.onset_lag == 3
    assert all((b - a).days == 14 for a, b in zip(cfg.snapshot_dates, cfg.snapshot_dates[1:]))
    groups = profile_groups(cfg)
    assert [len(groups[k]) for k in ("trusted", "unstable", "swap", "mediocre")] == [16, 2, 2, 40]
    by = {p.name: p for p in cfg.scanners}
    for n in groups["trusted"]:
        p = by[n]
        assert p.tpr >= 0.95 and p.fpr <= 0.01 and p.flip_prob <= 0.02 and p.exclusion_prob <= 0.02
    assert sorted(groups["unstable"]) == ["F-Secure", "Trustlook"]
    assert all(by[n].exclusion_prob == 0.3 for n in groups["unstable"])
    assert all(by[n].tpr == 0.9 and by[n].version_swap[:2] == (3, 0.05) for n in groups["swap"])
    for n in groups["mediocre"]:
        p = by[n]
        assert 0.2 <= p.tpr <= 0.7 and 0.0 <= p.fpr <= 0.1
        if p.version_swap:
            assert 0.2 <= p.version_swap[1] <= 0.7 and 0.0 <= p.version_swap[2] <= 0.1


def test_default_config_is_seeded():
    assert default_config(5) == default_config(5)
    assert default_config(5) != default_config(6)


def test_config_json_round_trip(tmp_path):
    cfg = default_config(3)
    cfg.save(tmp_path / "c.json")
    assert SimConfig.load(tmp_path / "c.json") == cfg


@pytest.mark.parametrize(
    "change, field",
    [
        ({"n_apps": 0}, "n_apps"),
        ({"malicious_fraction": 1.5}, "malicious_fraction"),
        ({"q0": -0.1}, "q0"),
        ({"onset_lag": -1}, "onset_lag"),
        ({"arrival_fraction": 2.0}, "arrival_fraction"),
        ({"snapshot_dates": (date(2019, 1, 2), date(2019, 1, 1))}, "snapshot_dates"),
    ],
)
def test_config_validation_names_the_field(change, field):
    cfg = dataclasses.replace(small_config([ScannerProfile("a", 0.5, 0.1)]), **change)
    with pytest.raises(SimConfigError, match=field):
        cfg.validate()


def test_profile_validation():
    with pytest.raises(SimConfigError, match="tpr"):
        small_config([ScannerProfile("a", 1.2, 0.0)]).validate()
    with pytest.raises(SimConfigError, match="degraded"):
        small_config([ScannerProfile("a", 0.5, 0.0, version_swap=(1, 0.5, 2.0))]).validate()
    with pytest.raises(SimConfigError, match="unique"):
        small_config([ScannerProfile("a", 0.5, 0.0), ScannerProfile("a", 0.5, 0.0)]).validate()


def test_perfect_scanner_is_always_correct():
    corpus, gt = generate_corpus(small_config([ScannerProfile("p", 1.0, 0.0)], q0=0.0))
    assert all(s == 1.0 for _, s in correctness_series(corpus, gt)["p"].points)


def test_always_excluded_scanner():
    cfg = small_config([ScannerProfile("gone", 1.0, 0.0, exclusion_prob=1.0), ScannerProfile("p", 1.0, 0.0)])
    corpus, gt = generate_corpus(cfg)
    assert all(s == 0.0 for _, s in correctness_series(corpus, gt, ["gone"])["gone"].points)
    app = next(iter(gt))
    assert certainty(corpus, "gone", app) == 1.0


def test_suppression_shape():
    assert suppression([0, 1.5, 3, 10], 0.8, 3).tolist() == pytest.approx([0.8, 0.4, 0.0, 0.0])
    assert suppression([0, 5], 0.8, 0).tolist() == [0.0, 0.0]
    assert snapshot_period_days(biweekly_dates(date(2019, 1, 1), 5)) == 14
    assert snapshot_period_days([date(2019, 1, 1)]) == DEFAULT_PERIOD_DAYS


def test_late_arrivals():
    cfg = dataclasses.replace(default_config(1), n_apps=300)
    specs = app_specs(cfg)
    late = [s for s in specs if s.arrival > 0]
    assert 0.3 < len(late) / len(specs) < 0.5
    corpus, _ = generate_corpus(cfg)
    for s in specs:
        present = [i for i, snap in enumerate(corpus.snapshots) if s.app_id in snap.reports]
        assert present == list(range(s.arrival, len(corpus)))
        if s.arrival:
            assert cfg.snapshot_dates[s.arrival - 1] < s.first_seen <= cfg.snapshot_dates[s.arrival]


def test_times_submitted_grows_by_one_per_snapshot():
    corpus, gt = generate_corpus(small_config([ScannerProfile("p", 0.9, 0.1)], n_apps=30))
    for app in gt:
        seen = [s.reports[app].times_submitted for s in corpus.snapshots if app in s.reports]
        assert np.all(np.diff(seen) == 1)


@settings(max_examples=15)
@given(
    st.integers(0, 10_000),
    st.floats(0, 1),
    st.floats(0, 1),
    st.floats(0, 0.5),
    st.floats(0, 1),
    st.floats(0, 1),
)
def test_generated_reports_are_consistent_and_deterministic(seed, tpr, fpr, flip, excl, arrivals):
    cfg = small_config(
        [ScannerProfile("a", tpr, fpr, flip, excl), ScannerProfile("b", 1 - tpr, fpr, flip, 0.0, (2, fpr, tpr))],
        n_apps=25,
        seed=seed,
        arrival_fraction=arrivals,
    )
    cfg.validate()
    corpus, gt = generate_corpus(cfg)
    again, gt2 = generate_corpus(cfg)
    assert corpus == again and gt == gt2
    assert len(gt) == 25
    for snap in corpus.snapshots:
        for rep in snap.reports.values():
            assert rep.positives == sum(r.detected for r in rep.scans.values())
            assert rep.total == len(rep.scans) and rep.first_seen <= rep.scan_date <= snap.date
            assert rep.times_submitted >= 1


def test_written_corpus_is_byte_identical(tmp_path):
    cfg = dataclasses.replace(default_config(9), n_apps=150)
    for name in ("a", "b"):
        corpus, _ = generate_corpus(cfg)
        write_corpus(corpus, tmp_path / name)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_apps_do_not_depend_on_app_count():
    # per-app streams: the first apps are identical whatever n_apps is
    cfg = small_config([ScannerProfile("p", 0.7, 0.1, 0.05, 0.1)], n_apps=40, seed=3)
    small, _ = generate_corpus(dataclasses.replace(cfg, n_apps=10))
    big, _ = generate_corpus(cfg)
    for s_small, s_big in zip(small.snapshots, big.snapshots):
        for app, rep in s_small.reports.items():
            assert s_big.reports[app] == rep


def test_calibration_of_mature_malicious_reports(default_sim):
    cfg, corpus, gt = default_sim
    specs = {s.app_id: s for s in app_specs(cfg)}
    last = corpus.snapshots[-1]
    period = snapshot_period_days(cfg.snapshot_dates)
    mature = [
        a
        for a, r in last.reports.items()
        if gt[a] == Label.MALICIOUS and (last.date - specs[a].first_seen).days >= cfg.onset_lag * period
    ]
    assert len(mature) >= 1000 * 0.8
    pos = np.mean([last.reports[a].positives for a in mature])
    tot = np.mean([last.reports[a].total for a in mature])
    assert abs(pos - 26.26) <= 3
    assert abs(tot - 60) <= 1


def _verdict_key(rep):
    return tuple(sorted((k, v.detected) for k, v in rep.scans.items()))


def test_churn_between_snapshots(default_sim):
    _, corpus, _ = default_sim
    for a, b in zip(corpus.snapshots, corpus.snapshots[1:]):
        common = [x for x in a.reports if x in b.reports]
        unchanged = np.mean([_verdict_key(a.reports[x]) == _verdict_key(b.reports[x]) for x in common])
        assert 0.05 <= unchanged <= 0.35


def test_monotone_maturity_of_fresh_cohort():
    cfg = dataclasses.replace(default_config(42), max_age_days=0, arrival_fraction=0.0)
    corpus, gt = generate_corpus(cfg)
    mal = [a for a in gt if gt[a] == Label.MALICIOUS]
    assert len(mal) >= 900
    means = [np.mean([s.reports[a].positives for a in mal]) for s in corpus.snapshots[: cfg.onset_lag + 1]]
    for x, y in zip(means, means[1:]):
        assert y >= x - 1
    assert means[-1] - means[0] > 5


def test_monotone_maturity_in_default_first_snapshot_cohort(default_sim):
    # the planted engine swaps remove detections at snapshot 3 on purpose; maturity
    # is measured on the scanners whose rates never change
    cfg, corpus, gt = default_sim
    steady = {p.name for p in cfg.scanners if p.version_swap is None}
    cohort = [s.app_id for s in app_specs(cfg) if s.arrival == 0 and s.truth == Label.MALICIOUS]

    def steady_positives(rep):
        return sum(1 for n, r in rep.scans.items() if r.detected and n in steady)

    means = [np.mean([steady_positives(s.reports[a]) for a in cohort]) for s in corpus.snapshots[: cfg.onset_lag + 1]]
    for x, y in zip(means, means[1:]):
        assert y >= x - 1


def test_gaussian_vectors():
    gt = generate_corpus(small_config([ScannerProfile("p", 1.0, 0.0)], n_apps=400))[1]
    ids, X = gaussian_vectors(gt, n_features=3, seed=1)
    assert ids == sorted(gt) and X.shape == (400, 3)
    mal = np.array([gt[a] == Label.MALICIOUS for a in ids])
    assert X[mal].mean() == pytest.approx(1.5, abs=0.15)
    assert X[~mal].std() == pytest.approx(2.0, abs=0.2)
    assert np.array_equal(gaussian_vectors(gt, 3, seed=1)[1], X)
