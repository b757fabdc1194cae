"""Command-line entry point.

Exit codes: 0 on success, 1 for data errors (unreadable or inconsistent
inputs), 2 for usage errors (bad flags, unknown strategy kinds, refusing
to overwrite). Every command writes a provenance record next to its
outputs: ``run.json`` inside an output directory, ``<file>.run.json``
beside an output file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
from datetime import date
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .features import DEFAULT_IMPORTANCE_CUTOFF, read_vectors_csv
from .forest import DEFAULT_DEPTH_GRID, GridSearchConfig
from .harness.downstream import (
    ClassifierKind,
    ClassifierSpec,
    GroundTruthStrategy,
    VectorSet,
    downstream_experiment,
)
from .harness.evaluation import (
    BestThreshold,
    BruteForceThreshold,
    apply_strategy,
    timeseries_eval,
    write_eval_csv,
)
from .harness.training import FeatureSet, ForestStrategy, train_strategy
from .reports import (
    MaatError,
    Snapshot,
    load_corpus,
    load_ground_truth,
    load_snapshot,
    parse_date,
    write_corpus,
    write_ground_truth,
)
from .scanners import (
    DEFAULT_CERTAINTY_CUTOFF,
    DEFAULT_CORRECTNESS_CUTOFF,
    certainty_scores,
    tabulate_correctness,
    trusted_scanners,
    write_certainty_csv,
    write_correctness_csv,
    write_sets_json,
)
from .simulator import SimConfig, default_config, generate_corpus
from .strategies import DEFAULT_T_MAX, CountThreshold, PercentThreshold, SubsetThreshold, drebin_strategy

logger = logging.getLogger("maat")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2

STRATEGY_KINDS = ("count", "percent", "subset", "drebin", "forest", "best", "bruteforce", "truth")


class UsageError(Exception):
    pass


# -- provenance ------------------------------------------------------------


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def corpus_digest(manifest) -> str:
    """Digest of a manifest plus every snapshot file it lists, in manifest order."""
    manifest = Path(manifest)
    h = hashlib.sha256(manifest.read_bytes())
    for entry in json.loads(manifest.read_text(encoding="utf-8")):
        p = Path(entry["path"])
        h.update(file_digest(p if p.is_absolute() else manifest.parent / p).encode())
    return h.hexdigest()


class Run:
    """Collects what a provenance record needs while a command executes."""

    # flags that cannot change any output and are left out of the record
    UNRECORDED = ("out", "jobs", "force", "verbose", "func")

    def __init__(self, args: argparse.Namespace):
        self.command = args.command
        self.args = {k: v for k, v in sorted(vars(args).items()) if k not in self.UNRECORDED}
        self.inputs: Dict[str, dict] = {}

    def add_file(self, role: str, path) -> None:
        self.inputs[role] = {"path": str(path), "sha256": file_digest(path)}

    def add_corpus(self, role: str, manifest) -> None:
        self.inputs[role] = {"path": str(manifest), "sha256": corpus_digest(manifest)}

    def write(self, path: Path) -> None:
        record = {
            "tool": "maat",
            "version": __version__,
            "command": self.command,
            "args": self.args,
            "seed": self.args.get("seed"),
            "inputs": self.inputs,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _sidecar(out: Path) -> Path:
    return out.with_name(out.name + ".run.json")


def _check_file_out(out: Path, force: bool) -> None:
    for p in (out, _sidecar(out)):
        if p.exists() and not force:
            raise UsageError(f"{p} already exists; pass --force to overwrite")
    if out.exists() and out.is_dir():
        raise UsageError(f"{out} is a directory")
    out.parent.mkdir(parents=True, exist_ok=True)


def _check_dir_out(out: Path, force: bool) -> None:
    if out.exists():
        if not out.is_dir():
            raise UsageError(f"{out} exists and is not a directory")
        if any(out.iterdir()) and not force:
            raise UsageError(f"{out} is not empty; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)


def resolve_jobs(value: Optional[int]) -> int:
    if value is None:
        env = os.environ.get("MAAT_JOBS", "").strip()
        if not env:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"MAAT_JOBS must be an integer (got {env!r})") from None
    if value < 1:
        raise UsageError("--jobs must be >= 1")
    return value


# -- strategy descriptors --------------------------------------------------


def _need(entry: dict, key: str):
    if key not in entry:
        raise UsageError(f"strategy kind {entry.get('kind')!r} needs the field {key!r}")
    return entry[key]


def build_strategy(entry: dict, base: Path, run: Run, index: int = 0):
    """Instantiate one strategy from its JSON descriptor; relative paths resolve against ``base``."""
    if not isinstance(entry, dict):
        raise UsageError(f"strategy entry {index} is not an object")
    kind = entry.get("kind")
    t_max = int(entry.get("t_max", DEFAULT_T_MAX))

    def path(key):
        p = Path(_need(entry, key))
        return p if p.is_absolute() else base / p

    if kind == "count":
        strat = CountThreshold(int(_need(entry, "t")))
    elif kind == "percent":
        strat = PercentThreshold(float(_need(entry, "p")))
    elif kind == "subset":
        strat = SubsetThreshold(frozenset(_need(entry, "scanners")), int(_need(entry, "t")))
    elif kind == "drebin":
        strat = drebin_strategy()
    elif kind == "best":
        strat = BestThreshold(t_max)
    elif kind == "forest":
        if "path" in entry and "model" not in entry:
            entry = {**entry, "model": entry["path"]}
        model = path("model")
        run.add_file(f"strategy[{index}].model", model)
        strat = ForestStrategy.load(model)
    elif kind == "bruteforce":
        ref, truth = path("corpus"), path("truth")
        run.add_corpus(f"strategy[{index}].corpus", ref)
        run.add_file(f"strategy[{index}].truth", truth)
        strat = BruteForceThreshold(load_corpus(ref), load_ground_truth(truth), t_max)
    elif kind == "truth":
        truth = path("truth")
        run.add_file(f"strategy[{index}].truth", truth)
        strat = GroundTruthStrategy(load_ground_truth(truth))
    else:
        raise UsageError(f"unknown strategy kind {kind!r} (known: {', '.join(STRATEGY_KINDS)})")
    if "name" in entry:
        if dataclasses.is_dataclass(strat) and getattr(type(strat), "__dataclass_params__").frozen:
            strat = dataclasses.replace(strat, name=str(entry["name"]))
        else:
            strat.name = str(entry["name"])
    return strat


def parse_strategy_text(text: str) -> dict:
    """Compact descriptors for ``detect``: ``count:4``, ``percent:0.5``, ``drebin``,
    ``forest:model.json``, ``truth:labels.csv`` or a JSON file holding one descriptor."""
    kind, _, arg = text.partition(":")
    if kind == "count" and arg:
        return {"kind": "count", "t": int(arg)}
    if kind == "percent" and arg:
        return {"kind": "percent", "p": float(arg)}
    if kind == "drebin" and not arg:
        return {"kind": "drebin"}
    if kind in ("forest", "truth") and arg:
        return {"kind": kind, "model" if kind == "forest" else "truth": arg}
    p = Path(text)
    if p.suffix == ".json" and p.is_file():
        obj = json.loads(p.read_text(encoding="utf-8"))
        if isinstance(obj, dict) and "kind" in obj:
            return obj
        if isinstance(obj, dict) and "feature_kind" in obj:
            return {"kind": "forest", "model": text}
    raise UsageError(f"cannot parse strategy {text!r}")


# -- commands --------------------------------------------------------------


def cmd_simulate(args) -> int:
    run = Run(args)
    if args.config:
        run.add_file("config", args.config)
        cfg = dataclasses.replace(SimConfig.load(args.config), seed=args.seed)
    else:
        cfg = default_config(args.seed)
    cfg.validate()
    out = Path(args.out)
    _check_dir_out(out, args.force)
    corpus, gt = generate_corpus(cfg)
    write_corpus(corpus, out)
    write_ground_truth(gt, out / "ground_truth.csv")
    cfg.save(out / "config.json")
    run.write(out / "run.json")
    logger.info("wrote %d snapshots of %d apps to %s", len(corpus), len(gt), out)
    return EXIT_OK


def cmd_scanner_stats(args) -> int:
    run = Run(args)
    run.add_corpus("corpus", args.corpus)
    run.add_file("truth", args.truth)
    corpus = load_corpus(args.corpus)
    gt = load_ground_truth(args.truth)
    out = Path(args.out)
    _check_dir_out(out, args.force)
    rows = tabulate_correctness(corpus, gt, corpus.scanner_names())
    sets = trusted_scanners(corpus, gt, args.correctness_cutoff, args.certainty_cutoff)
    if not sets.correct:
        logger.warning("no scanner reaches correctness %s", args.correctness_cutoff)
    if not sets.trusted:
        logger.warning("the trusted set is empty")
    write_correctness_csv(rows, out / "correctness.csv")
    write_certainty_csv(certainty_scores(corpus), out / "certainty.csv")
    write_sets_json(sets, out / "sets.json")
    run.write(out / "run.json")
    return EXIT_OK


def _depth_grid(text: str):
    grid = []
    for part in text.split(","):
        part = part.strip().lower()
        if part in ("none", "inf", "unbounded"):
            grid.append(None)
        else:
            try:
                grid.append(int(part))
            except ValueError:
                raise UsageError(f"bad max-depth grid entry {part!r}") from None
    return tuple(grid)


def cmd_train(args) -> int:
    run = Run(args)
    jobs = resolve_jobs(args.jobs)
    try:
        kind = FeatureSet.parse(args.features)
    except ValueError:
        raise UsageError(f"unknown feature set {args.features!r}") from None
    run.add_corpus("corpus", args.corpus)
    run.add_file("truth", args.truth)
    out = Path(args.out)
    _check_file_out(out, args.force)
    corpus = load_corpus(args.corpus)
    if args.until:
        until = parse_date(args.until)
        if until < corpus.dates[0]:
            raise MaatError(f"--until {until} excludes every snapshot (first is {corpus.dates[0]})")
        corpus = corpus.until(until)
    gt = load_ground_truth(args.truth)
    config = GridSearchConfig(_depth_grid(args.max_depth_grid), args.folds, args.n_estimators, args.seed)
    strat = train_strategy(
        corpus,
        gt,
        kind,
        config,
        args.importance_cutoff,
        args.correctness_cutoff,
        args.certainty_cutoff,
        jobs,
    )
    strat.save(out)
    run.write(_sidecar(out))
    return EXIT_OK


def cmd_label(args) -> int:
    run = Run(args)
    run.add_file("model", args.model)
    run.add_corpus("corpus", args.corpus)
    out = Path(args.out)
    _check_file_out(out, args.force)
    strat = ForestStrategy.load(args.model)
    corpus = load_corpus(args.corpus)
    snaps = corpus.snapshots
    if args.date:
        when = parse_date(args.date)
        snaps = [s for s in snaps if s.date == when]
        if not snaps:
            raise MaatError(f"no snapshot dated {when} in {args.corpus}")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "app_id", "label"])
        for snap in snaps:
            labels = apply_strategy(strat, snap)
            for app_id in sorted(labels):
                w.writerow([snap.date.isoformat(), app_id, str(labels[app_id])])
    run.write(_sidecar(out))
    return EXIT_OK


def load_strategy_spec(path) -> List:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc.msg})") from None
    entries = obj.get("strategies") if isinstance(obj, dict) else obj
    if not isinstance(entries, list) or not entries:
        raise UsageError(f"{path}: expected a non-empty list of strategies")
    return entries


def cmd_eval(args) -> int:
    run = Run(args)
    run.add_file("strategies", args.strategies)
    run.add_corpus("corpus", args.corpus)
    run.add_file("truth", args.truth)
    entries = load_strategy_spec(args.strategies)
    base = Path(args.strategies).parent
    strategies = [build_strategy(e, base, run, i) for i, e in enumerate(entries)]
    names = [s.name for s in strategies]
    if len(set(names)) != len(names):
        raise UsageError(f"duplicate strategy names: {names}")
    out = Path(args.out)
    _check_file_out(out, args.force)
    rows = timeseries_eval(strategies, load_corpus(args.corpus), load_ground_truth(args.truth))
    write_eval_csv(rows, out)
    run.write(_sidecar(out))
    return EXIT_OK


def _load_snapshot_any_date(path, when: Optional[str]) -> Snapshot:
    if when:
        return load_snapshot(path, when)
    snap = load_snapshot(path, date.max)
    if not snap.reports:
        raise MaatError(f"{path}: snapshot is empty")
    return Snapshot(max(r.scan_date for r in snap.reports.values()), snap.reports)


def _int_grid(text: str, flag: str):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers (got {text!r})") from None


def cmd_detect(args) -> int:
    run = Run(args)
    jobs = resolve_jobs(args.jobs)
    desc = parse_strategy_text(args.strategy)
    run.add_file("train_vectors", args.train_vectors)
    run.add_file("train_snapshot", args.train_corpus_snapshot)
    run.add_file("test_vectors", args.test_vectors)
    run.add_file("test_truth", args.test_truth)
    strategy = build_strategy(desc, Path("."), run)
    kinds = list(ClassifierKind) if args.classifier == "all" else [ClassifierKind(args.classifier)]
    specs = [
        ClassifierSpec(
            k,
            knn_k_grid=_int_grid(args.k_grid, "--k-grid"),
            rf_trees_grid=_int_grid(args.trees_grid, "--trees-grid"),
            svm_lambda=args.svm_lambda,
            svm_epochs=args.svm_epochs,
            seed=args.seed,
            folds=args.folds,
        )
        for k in kinds
    ]
    out = Path(args.out)
    _check_file_out(out, args.force)
    train_ids, train_names, train_X = read_vectors_csv(args.train_vectors)
    test_ids, test_names, test_X = read_vectors_csv(args.test_vectors)
    if train_names != test_names:
        raise MaatError("train and test vector files have different feature columns")
    train = VectorSet(train_ids, train_X, train_names)
    test = VectorSet(test_ids, test_X, test_names)
    snap = _load_snapshot_any_date(args.train_corpus_snapshot, args.snapshot_date)
    gt = load_ground_truth(args.test_truth)
    results = [downstream_experiment(train, snap, strategy, test, gt, spec, jobs).to_json() for spec in specs]
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({"strategy": results[0]["strategy"], "results": results}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    run.write(_sidecar(out))
    return EXIT_OK


# -- argument parsing ------------------------------------------------------


def _add_cutoffs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--correctness-cutoff", type=float, default=DEFAULT_CORRECTNESS_CUTOFF)
    p.add_argument("--certainty-cutoff", type=float, default=DEFAULT_CERTAINTY_CUTOFF)


def _add_common(p: argparse.ArgumentParser, out_help: str, jobs: bool = False) -> None:
    p.add_argument("--out", required=True, help=out_help)
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    if jobs:
        p.add_argument("--jobs", type=int, default=None, help="worker threads (default: $MAAT_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maat", description="Labeling strategies from time series of scan reports.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scan-report corpus")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="simulation config JSON")
    src.add_argument("--default", action="store_true", help="use the built-in 60-scanner configuration")
    p.add_argument("--seed", type=int, required=True)
    _add_common(p, "output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scanner-stats", help="correctness, certainty and trusted scanner sets")
    p.add_argument("--corpus", required=True, help="corpus manifest")
    p.add_argument("--truth", required=True, help="ground-truth CSV")
    _add_cutoffs(p)
    _add_common(p, "output directory")
    p.set_defaults(func=cmd_scanner_stats)

    p = sub.add_parser("train", help="train a forest labeling strategy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--features", required=True, help="naive, naive-sel, eng or eng-sel")
    p.add_argument("--until", help="last snapshot date to train on (YYYY-MM-DD)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-estimators", type=int, default=100)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument(
        "--max-depth-grid",
        default=",".join("none" if d is None else str(d) for d in DEFAULT_DEPTH_GRID),
        help="comma-separated depths; 'none' is unbounded",
    )
    p.add_argument("--importance-cutoff", type=float, default=DEFAULT_IMPORTANCE_CUTOFF)
    _add_cutoffs(p)
    _add_common(p, "model JSON path", jobs=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("label", help="label a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--date", help="only this snapshot")
    _add_common(p, "labels CSV path")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("eval", help="score strategies on every snapshot")
    p.add_argument("--strategies", required=True, help="strategy spec JSON")
    p.add_argument("--corpus", required=True)
    p.add_argument("--truth", required=True)
    _add_common(p, "rows CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("detect", help="downstream detection with strategy-labelled training vectors")
    p.add_argument("--train-vectors", required=True)
    p.add_argument("--train-corpus-snapshot", required=True, help="snapshot JSONL with the training apps' reports")
    p.add_argument("--snapshot-date", help="date of that snapshot (default: latest scan date in it)")
    p.add_argument("--strategy", required=True, help="count:T, percent:P, drebin, forest:MODEL, truth:CSV or a JSON file")
    p.add_argument("--test-vectors", required=True)
    p.add_argument("--test-truth", required=True)
    p.add_argument("--classifier", required=True, choices=[k.value for k in ClassifierKind] + ["all"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k-grid", default="11,26,51,101")
    p.add_argument("--trees-grid", default="25,50,75,100")
    p.add_argument("--svm-lambda", type=float, default=1e-4)
    p.add_argument("--svm-epochs", type=int, default=20)
    p.add_argument("--folds", type=int, default=10)
    _add_common(p, "metrics JSON path", jobs=True)
    p.set_defaults(func=cmd_detect)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="maat: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"maat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MaatError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"maat: error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
