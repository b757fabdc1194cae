import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import counted, report, snapshot, truth
from maat.reports import GroundTruth, Label, MissingReportError
from maat.strategies import (
    DEFAULT_T_MAX,
    DREBIN_SCANNERS,
    CountThreshold,
    PercentThreshold,
    SubsetThreshold,
    brute_force_threshold,
    drebin_strategy,
    label_count_threshold,
    label_percent_threshold,
    label_subset_threshold,
)
from oracles import brute_force_t

M, B = Label.MALICIOUS, Label.BENIGN


def test_count_threshold_examples():
    assert label_count_threshold(counted("a", 14, 60), 1) == M
    assert label_count_threshold(counted("a", 0, 60), 1) == B
    assert label_count_threshold(counted("a", 0, 60), 60) == B
    assert label_count_threshold(counted("a", 3, 60), 4) == B
    assert label_count_threshold(counted("a", 4, 60), 4) == M


def test_percent_threshold_examples():
    assert label_percent_threshold(counted("a", 14, 60), 0.5) == B
    assert label_percent_threshold(counted("a", 30, 60), 0.5) == M
    assert label_percent_threshold(counted("a", 0, 0), 0.5) == B


def test_subset_threshold_examples():
    drebin = sorted(DREBIN_SCANNERS)
    assert drebin == [
        "AVG", "AntiVir", "BitDefender", "ClamAV", "ESET", "F-Secure", "Kaspersky", "McAfee", "Panda", "Sophos"
    ]
    two = report("a", {drebin[0]: True, drebin[1]: True, drebin[2]: False, "Other": True})
    one = report("a", {drebin[0]: True, "Other": True, "Another": True})
    none = report("a", {"Other": True, "Another": True, "Third": True})
    assert label_subset_threshold(two, DREBIN_SCANNERS, 2) == M
    assert label_subset_threshold(one, DREBIN_SCANNERS, 2) == B
    assert label_subset_threshold(none, DREBIN_SCANNERS, 2) == B
    assert drebin_strategy().label(two) == M
    assert drebin_strategy().name == "drebin"


def test_invalid_parameters():
    with pytest.raises(ValueError):
        CountThreshold(0)
    with pytest.raises(ValueError):
        PercentThreshold(0.0)
    with pytest.raises(ValueError):
        PercentThreshold(1.5)
    with pytest.raises(ValueError):
        SubsetThreshold(frozenset({"A"}), 2)


def test_canonical_names():
    assert CountThreshold(4).name == "vt>=4"
    assert PercentThreshold(0.5).name == "vt>=50%"
    assert CountThreshold(4, name="custom").name == "custom"


def test_brute_force_plateau_picks_smallest():
    snap = snapshot([counted("m1", 5, 10), counted("m2", 7, 10), counted("b1", 0, 10), counted("b2", 1, 10)])
    gt = truth({"m1": 1, "m2": 1, "b1": 0, "b2": 0})
    assert brute_force_threshold(snap, gt, 10) == (2, 1.0)


def test_brute_force_all_benign_ties_to_one():
    snap = snapshot([counted(f"b{i}", 0, 10) for i in range(4)])
    gt = truth({f"b{i}": 0 for i in range(4)})
    assert brute_force_threshold(snap, gt, 10) == (1, 0.0)


def test_brute_force_errors():
    snap = snapshot([counted("a", 1, 3)])
    with pytest.raises(ValueError):
        brute_force_threshold(snap, GroundTruth({}), 10)
    with pytest.raises(MissingReportError):
        brute_force_threshold(snap, truth({"a": 1, "ghost": 0}), 10)
    assert DEFAULT_T_MAX == 60


@given(st.integers(0, 60), st.integers(0, 60), st.integers(1, 60), st.integers(1, 60))
def test_count_threshold_monotone_in_t(pos, extra, t1, t2):
    rep = counted("a", pos, pos + extra)
    lo, hi = sorted((t1, t2))
    if label_count_threshold(rep, hi) == M:
        assert label_count_threshold(rep, lo) == M


@given(st.integers(0, 60), st.integers(0, 60), st.floats(1e-6, 1.0))
def test_percent_equals_count_at_ceiling(pos, extra, p):
    rep = counted("a", pos, pos + extra)
    if rep.total > 0:
        t = math.ceil(p * rep.total)
        # ceil can land on 0 only when p * total underflows; the count form needs t >= 1
        assert label_percent_threshold(rep, p) == label_count_threshold(rep, max(t, 1))


@given(
    st.dictionaries(st.sampled_from(sorted(DREBIN_SCANNERS)), st.booleans()),
    st.dictionaries(st.sampled_from(["X1", "X2", "X3"]), st.booleans()),
    st.dictionaries(st.sampled_from(["X1", "X2", "X3"]), st.booleans()),
    st.integers(1, 10),
)
def test_subset_ignores_outside_scanners(inside, outside_a, outside_b, t):
    a = report("a", {**inside, **outside_a})
    b = report("a", {**inside, **outside_b})
    assert label_subset_threshold(a, DREBIN_SCANNERS, t) == label_subset_threshold(b, DREBIN_SCANNERS, t)


@given(st.lists(st.tuples(st.integers(0, 12), st.booleans()), min_size=1, max_size=25), st.integers(1, 15))
def test_brute_force_matches_exhaustive_oracle(apps, t_max):
    reps = [counted(f"a{i}", p, 12) for i, (p, _) in enumerate(apps)]
    gt = truth({f"a{i}": int(m) for i, (_, m) in enumerate(apps)})
    t, score = brute_force_threshold(snapshot(reps), gt, t_max)
    t_ref, score_ref = brute_force_t([p for p, _ in apps], [int(m) for _, m in apps], t_max)
    assert t == t_ref
    assert score == pytest.approx(score_ref, abs=1e-12)


@given(st.integers(0, 30), st.integers(1, 30))
def test_strategies_are_deterministic(pos, t):
    rep = counted("a", pos, 30)
    s = CountThreshold(t)
    assert s.label(rep) == s.label(rep)
