import csv
import dataclasses
import json

import pytest

from maat.cli import main
from maat.features import write_vectors_csv
from maat.forest import mcc
from maat.harness import ForestStrategy, apply_strategy, read_eval_csv
from maat.reports import load_corpus, load_ground_truth
from maat.simulator import default_config, gaussian_vectors

SMALL_TRAIN = ["--n-estimators", "8", "--folds", "3"]


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = dataclasses.replace(default_config(0), n_apps=200)
    cfg.save(root / "small.json")
    assert main(["simulate", "--config", str(root / "small.json"), "--seed", "11", "--out", str(root / "sim")]) == 0
    return root


def corpus_args(sim):
    return ["--corpus", str(sim / "manifest.json"), "--truth", str(sim / "ground_truth.csv")]


def tree_bytes(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_simulate_is_byte_identical(sim_dir, tmp_path):
    args = ["simulate", "--config", str(sim_dir / "small.json"), "--seed", "11", "--out"]
    assert main(args + [str(tmp_path / "again")]) == 0
    assert tree_bytes(tmp_path / "again") == tree_bytes(sim_dir / "sim")
    run = json.loads((tmp_path / "again" / "run.json").read_text())
    assert run["command"] == "simulate" and run["seed"] == 11
    assert run["inputs"]["config"]["sha256"]
    assert "out" not in run["args"]


def test_simulate_usage_errors(sim_dir, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--default", "--out", str(tmp_path / "x")])
    assert exc.value.code == 2
    # a non-empty output directory needs --force
    assert main(["simulate", "--config", str(sim_dir / "small.json"), "--seed", "1", "--out", str(sim_dir / "sim")]) == 2
    assert "--force" in capsys.readouterr().err


def test_simulate_invalid_config_names_the_field(sim_dir, tmp_path, capsys):
    cfg = json.loads((sim_dir / "small.json").read_text())
    cfg["n_apps"] = 0
    (tmp_path / "bad.json").write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(tmp_path / "bad.json"), "--seed", "1", "--out", str(tmp_path / "o")]) == 1
    assert "n_apps" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_scanner_stats(sim_dir, tmp_path, caplog):
    sim = sim_dir / "sim"
    out = tmp_path / "stats"
    assert main(["scanner-stats", *corpus_args(sim), "--correctness-cutoff", "1.01", "--out", str(out)]) == 0
    assert "no scanner reaches" in caplog.text
    sets = json.loads((out / "sets.json").read_text())
    assert sets["trusted"] == [] and sets["correct"] == []
    with open(out / "correctness.csv") as fh:
        rows = list(csv.reader(fh))
    corpus = load_corpus(sim / "manifest.json")
    assert len(rows) == 1 + len(corpus) * len(corpus.scanner_names())


def test_scanner_stats_missing_truth(sim_dir, tmp_path, capsys):
    missing = tmp_path / "nowhere.csv"
    args = ["scanner-stats", "--corpus", str(sim_dir / "sim" / "manifest.json"), "--truth", str(missing)]
    assert main(args + ["--out", str(tmp_path / "s")]) == 1
    assert str(missing) in capsys.readouterr().err


@pytest.fixture(scope="module")
def trained(sim_dir):
    sim = sim_dir / "sim"
    model = sim_dir / "model.json"
    args = ["train", *corpus_args(sim), "--features", "naive-sel", "--seed", "3", *SMALL_TRAIN]
    assert main(args + ["--out", str(model)]) == 0
    return model


def test_train_is_reproducible_and_jobs_independent(sim_dir, trained, tmp_path):
    sim = sim_dir / "sim"
    args = ["train", *corpus_args(sim), "--features", "naive-sel", "--seed", "3", *SMALL_TRAIN]
    assert main(args + ["--jobs", "4", "--out", str(tmp_path / "m.json")]) == 0
    assert (tmp_path / "m.json").read_bytes() == trained.read_bytes()
    side = json.loads((tmp_path / "m.json.run.json").read_text())
    assert side["command"] == "train" and side["args"]["features"] == "naive-sel"
    assert set(side["inputs"]) == {"corpus", "truth"}


def test_train_jobs_from_environment(sim_dir, trained, tmp_path, monkeypatch):
    sim = sim_dir / "sim"
    monkeypatch.setenv("MAAT_JOBS", "3")
    args = ["train", *corpus_args(sim), "--features", "naive-sel", "--seed", "3", *SMALL_TRAIN]
    assert main(args + ["--out", str(tmp_path / "m.json")]) == 0
    assert (tmp_path / "m.json").read_bytes() == trained.read_bytes()
    monkeypatch.setenv("MAAT_JOBS", "many")
    assert main(args + ["--out", str(tmp_path / "m2.json")]) == 2


def test_train_errors(sim_dir, tmp_path, capsys):
    sim = sim_dir / "sim"
    base = ["train", *corpus_args(sim), "--seed", "1", *SMALL_TRAIN]
    assert main(base + ["--features", "naive", "--until", "2000-01-01", "--out", str(tmp_path / "a.json")]) == 1
    assert "--until" in capsys.readouterr().err
    assert main(base + ["--features", "fancy", "--out", str(tmp_path / "b.json")]) == 2
    assert "fancy" in capsys.readouterr().err
    (tmp_path / "c.json").write_text("{}")
    assert main(base + ["--features", "naive", "--out", str(tmp_path / "c.json")]) == 2


def test_label_matches_in_process(sim_dir, trained, tmp_path):
    sim = sim_dir / "sim"
    out = tmp_path / "labels.csv"
    assert main(["label", "--model", str(trained), "--corpus", str(sim / "manifest.json"), "--out", str(out)]) == 0
    corpus = load_corpus(sim / "manifest.json")
    strat = ForestStrategy.load(trained)
    expected = [
        [s.date.isoformat(), a, str(lab)] for s in corpus.snapshots for a, lab in sorted(apply_strategy(strat, s).items())
    ]
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["date", "app_id", "label"] and rows[1:] == expected
    assert {r[2] for r in rows[1:]} <= {"benign", "malicious"}
    assert main(["label", "--model", str(trained), "--corpus", str(sim / "manifest.json"), "--date", "1999-01-01",
                 "--out", str(tmp_path / "none.csv")]) == 1


def write_spec(path, entries):
    path.write_text(json.dumps({"strategies": entries}))
    return path


LINEUP = [
    {"kind": "count", "t": 1},
    {"kind": "count", "t": 4},
    {"kind": "count", "t": 10},
    {"kind": "percent", "p": 0.5},
    {"kind": "drebin"},
    {"kind": "best"},
]


def test_eval_lineup(sim_dir, trained, tmp_path):
    sim = sim_dir / "sim"
    spec = write_spec(tmp_path / "s.json", [*LINEUP, {"kind": "forest", "model": str(trained)}])
    out = tmp_path / "rows.csv"
    assert main(["eval", "--strategies", str(spec), *corpus_args(sim), "--out", str(out)]) == 0
    rows = read_eval_csv(out)
    n = len(load_corpus(sim / "manifest.json"))
    assert len(rows) == 7 * n
    names = [r.strategy for r in rows[::n]]
    assert names == ["vt>=1", "vt>=4", "vt>=10", "vt>=50%", "drebin", "best", "forest-naive_selected"]
    for r in rows:
        assert r.mcc == pytest.approx(mcc(r.counts), abs=1e-12)
    side = json.loads((tmp_path / "rows.csv.run.json").read_text())
    assert "strategy[6].model" in side["inputs"]


def test_eval_bad_specs(sim_dir, tmp_path, capsys):
    sim = sim_dir / "sim"
    spec = write_spec(tmp_path / "s.json", [{"kind": "magic"}])
    assert main(["eval", "--strategies", str(spec), *corpus_args(sim), "--out", str(tmp_path / "r.csv")]) == 2
    assert "magic" in capsys.readouterr().err
    spec = write_spec(tmp_path / "t.json", [{"kind": "count"}])
    assert main(["eval", "--strategies", str(spec), *corpus_args(sim), "--out", str(tmp_path / "r.csv")]) == 2
    spec = write_spec(tmp_path / "u.json", [{"kind": "count", "t": 2}, {"kind": "count", "t": 2}])
    assert main(["eval", "--strategies", str(spec), *corpus_args(sim), "--out", str(tmp_path / "r.csv")]) == 2


def test_detect(sim_dir, tmp_path):
    sim = sim_dir / "sim"
    gt = load_ground_truth(sim / "ground_truth.csv")
    corpus = load_corpus(sim / "manifest.json")
    last = corpus.snapshots[-1]
    ids, X = gaussian_vectors(gt, n_features=3, separation=4.0, seed=0)
    present = [i for i, a in enumerate(ids) if a in last.reports]
    half = len(present) // 2
    write_vectors_csv(tmp_path / "train.csv", [ids[i] for i in present[:half]], ["a", "b", "c"], X[present[:half]])
    write_vectors_csv(tmp_path / "test.csv", [ids[i] for i in present[half:]], ["a", "b", "c"], X[present[half:]])
    snap_file = sim / f"snapshot_{last.date.isoformat()}.jsonl"
    base = [
        "detect", "--train-vectors", str(tmp_path / "train.csv"), "--train-corpus-snapshot", str(snap_file),
        "--test-vectors", str(tmp_path / "test.csv"), "--test-truth", str(sim / "ground_truth.csv"),
        "--seed", "0", "--k-grid", "3,5", "--trees-grid", "5", "--folds", "3",
    ]
    out = tmp_path / "det.json"
    truth = f"truth:{sim / 'ground_truth.csv'}"
    assert main(base + ["--strategy", truth, "--classifier", "all", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["strategy"] == "truth"
    assert [r["classifier"] for r in res["results"]] == ["knn", "rf", "gnb", "linear_svm"]
    assert all(r["mcc"] > 0.6 for r in res["results"])
    assert main(base + ["--strategy", "count:4", "--classifier", "gnb", "--out", str(tmp_path / "c.json")]) == 0
    assert main(base + ["--strategy", "nonsense", "--classifier", "gnb", "--out", str(tmp_path / "n.json")]) == 2
