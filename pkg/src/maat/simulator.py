"""Seeded generator of time-series scan-report corpora with planted ground truth.

Each scanner keeps a latent verdict per app that evolves as a Markov flip
process across snapshots. On top of that the generator models the ways a
scan platform drifts: scanners dropping out of individual reports, engine
version swaps that degrade detection, and immature reports whose detections
are partly suppressed during an app's first snapshots.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .reports import (
    GroundTruth,
    Label,
    PathLike,
    ScannerResult,
    ScanReport,
    Snapshot,
    TimeSeriesCorpus,
    parse_date,
)

# share of an app's permissions/tags drawn from its own class's side of the vocabulary
CLASS_MIXTURE = 0.7
# spacing assumed for single-snapshot configs when converting report age to snapshot periods
DEFAULT_PERIOD_DAYS = 14
# share of mediocre default profiles whose engine is updated mid-series
MEDIOCRE_UPDATE_SHARE = 0.5

TRUSTED_NAMES = (
    "AVG", "AhnLab-V3", "Avast-Mobile", "CAT-QuickHeal", "DrWeb", "ESET", "Fortinet",
    "Ikarus", "K7GW", "Kaspersky", "McAfee", "NANO-Antivirus", "Sophos", "Symantec",
    "SymantecMobileInsight", "Tencent",
)
UNSTABLE_NAMES = ("F-Secure", "Trustlook")
SWAP_NAMES = ("BitDefender", "AntiVir")
MEDIOCRE_NAMES = (
    "ALYac", "Acronis", "Ad-Aware", "Alibaba", "Antiy-AVL", "Arcabit", "Babable", "Baidu",
    "BitDefenderFalx", "Bkav", "CMC", "ClamAV", "Comodo", "CrowdStrike", "Cylance", "Cyren",
    "Emsisoft", "F-Prot", "GData", "Jiangmin", "Kingsoft", "MAX", "Malwarebytes",
    "McAfee-GW-Edition", "Microsoft", "Panda", "Qihoo-360", "Rising", "SUPERAntiSpyware",
    "TACHYON", "TheHacker", "TotalDefense", "TrendMicro", "VBA32", "VIPRE", "ViRobot",
    "Webroot", "Yandex", "Zillya", "Zoner",
)

PERMISSION_VOCAB = tuple(
    "android.permission." + p
    for p in (
        "ACCESS_COARSE_LOCATION", "ACCESS_FINE_LOCATION", "ACCESS_NETWORK_STATE",
        "ACCESS_WIFI_STATE", "BLUETOOTH", "CALL_PHONE", "CAMERA", "CHANGE_WIFI_STATE",
        "DISABLE_KEYGUARD", "GET_ACCOUNTS", "GET_TASKS", "INSTALL_PACKAGES", "INTERNET",
        "KILL_BACKGROUND_PROCESSES", "MOUNT_UNMOUNT_FILESYSTEMS", "PROCESS_OUTGOING_CALLS",
        "READ_CALL_LOG", "READ_CONTACTS", "READ_EXTERNAL_STORAGE", "READ_LOGS",
        "READ_PHONE_STATE", "READ_SMS", "RECEIVE_BOOT_COMPLETED", "RECEIVE_SMS",
        "RECORD_AUDIO", "SEND_SMS", "SET_WALLPAPER", "SYSTEM_ALERT_WINDOW", "VIBRATE",
        "WAKE_LOCK", "WRITE_CONTACTS", "WRITE_EXTERNAL_STORAGE", "WRITE_SETTINGS",
        "WRITE_SMS", "CHANGE_NETWORK_STATE", "RESTART_PACKAGES", "EXPAND_STATUS_BAR",
        "BROADCAST_STICKY", "MODIFY_AUDIO_SETTINGS", "USE_CREDENTIALS",
    )
)
TAG_VOCAB = (
    "checks-gps", "contains-elf", "sends-sms", "reflection", "dyn-calls", "crypto",
    "telephony", "checks-network-adapters", "obfuscated", "runtime-modules", "native-code",
    "contains-pe", "receives-sms", "clipboard", "sql-queries", "uses-exec",
)


class SimConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScannerProfile:
    name: str
    tpr: float
    fpr: float
    flip_prob: float = 0.0
    exclusion_prob: float = 0.0
    # (snapshot index, degraded tpr, degraded fpr)
    version_swap: Optional[Tuple[int, float, float]] = None

    def validate(self) -> None:
        for attr in ("tpr", "fpr", "flip_prob", "exclusion_prob"):
            v = getattr(self, attr)
            if not 0.0 <= v <= 1.0:
                raise SimConfigError(f"scanner {self.name}: {attr}={v} outside [0, 1]")
        if self.version_swap is not None:
            idx, tpr, fpr = self.version_swap
            if idx < 0:
                raise SimConfigError(f"scanner {self.name}: version_swap index must be >= 0")
            if not (0.0 <= tpr <= 1.0 and 0.0 <= fpr <= 1.0):
                raise SimConfigError(f"scanner {self.name}: degraded rates outside [0, 1]")


@dataclass(frozen=True)
class AppSpec:
    app_id: str
    truth: Label
    first_seen: date
    onset_lag: int
    # index of the first snapshot that contains the app
    arrival: int = 0


@dataclass(frozen=True)
class SimConfig:
    scanners: Tuple[ScannerProfile, ...]
    n_apps: int
    malicious_fraction: float
    snapshot_dates: Tuple[date, ...]
    permission_vocab: Tuple[str, ...] = PERMISSION_VOCAB
    tag_vocab: Tuple[str, ...] = TAG_VOCAB
    q0: float = 0.8
    onset_lag: int = 3
    seed: int = 0
    permissions_per_app: int = 6
    tags_per_app: int = 3
    max_age_days: int = 1095
    # share of apps that first appear after the first snapshot
    arrival_fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scanners", tuple(self.scanners))
        object.__setattr__(self, "snapshot_dates", tuple(parse_date(d) for d in self.snapshot_dates))
        object.__setattr__(self, "permission_vocab", tuple(self.permission_vocab))
        object.__setattr__(self, "tag_vocab", tuple(self.tag_vocab))

    def validate(self) -> None:
        if self.n_apps < 1:
            raise SimConfigError(f"n_apps must be >= 1 (got {self.n_apps})")
        if not 0.0 <= self.malicious_fraction <= 1.0:
            raise SimConfigError(f"malicious_fraction must lie in [0, 1] (got {self.malicious_fraction})")
        if not self.snapshot_dates:
            raise SimConfigError("snapshot_dates is empty")
        for a, b in zip(self.snapshot_dates, self.snapshot_dates[1:]):
            if not a < b:
                raise SimConfigError(f"snapshot_dates must be strictly increasing ({a} then {b})")
        if not self.scanners:
            raise SimConfigError("scanners is empty")
        names = [s.name for s in self.scanners]
        if len(set(names)) != len(names):
            raise SimConfigError("scanner names must be unique")
        for s in self.scanners:
            s.validate()
        if not 0.0 <= self.q0 <= 1.0:
            raise SimConfigError(f"q0 must lie in [0, 1] (got {self.q0})")
        if self.onset_lag < 0:
            raise SimConfigError(f"onset_lag must be >= 0 (got {self.onset_lag})")
        if self.permissions_per_app < 0 or self.tags_per_app < 0:
            raise SimConfigError("permissions_per_app and tags_per_app must be >= 0")
        if not 0.0 <= self.arrival_fraction <= 1.0:
            raise SimConfigError(f"arrival_fraction must lie in [0, 1] (got {self.arrival_fraction})")
        if self.max_age_days < 0:
            raise SimConfigError("max_age_days must be >= 0")

    def to_json(self) -> dict:
        d = asdict(self)
        d["snapshot_dates"] = [x.isoformat() for x in self.snapshot_dates]
        for s in d["scanners"]:
            if s["version_swap"] is not None:
                s["version_swap"] = list(s["version_swap"])
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "SimConfig":
        obj = dict(obj)
        try:
            scanners = tuple(
                ScannerProfile(
                    **{
                        **s,
                        "version_swap": tuple(s["version_swap"]) if s.get("version_swap") else None,
                    }
                )
                for s in obj.pop("scanners")
            )
            return cls(scanners=scanners, **obj)
        except (KeyError, TypeError) as exc:
            raise SimConfigError(f"bad simulation config: {exc}") from exc

    def save(self, path: PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: PathLike) -> "SimConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def biweekly_dates(start: date, n: int) -> Tuple[date, ...]:
    return tuple(start + timedelta(days=14 * i) for i in range(n))


def _mediocre_tpr(rng) -> float:
    # skewed toward the low end of [0.2, 0.7]
    return float(0.2 + 0.5 * rng.beta(0.5, 9.0))


def default_config(seed: int = 0) -> SimConfig:
    """60 scanners, 2000 apps, 10 biweekly snapshots; 40% of apps arrive late.

    16 reliable profiles, 2 that are frequently left out of reports, 2 whose
    engine degrades at snapshot 3, and 40 mediocre ones, about half of which
    get an engine update with fresh rates at a random snapshot.
    """
    rng = np.random.default_rng([seed, 0xC0F16])
    profiles: List[ScannerProfile] = []
    for name in TRUSTED_NAMES:
        profiles.append(
            ScannerProfile(
                name,
                tpr=float(rng.uniform(0.95, 1.0)),
                fpr=float(rng.uniform(0.0, 0.01)),
                flip_prob=float(rng.uniform(0.0, 0.004)),
                exclusion_prob=float(rng.uniform(0.0, 0.002)),
            )
        )
    for name in UNSTABLE_NAMES:
        profiles.append(
            ScannerProfile(
                name,
                tpr=float(rng.uniform(0.95, 1.0)),
                fpr=float(rng.uniform(0.0, 0.01)),
                flip_prob=0.002,
                exclusion_prob=0.3,
            )
        )
    for name in SWAP_NAMES:
        profiles.append(
            ScannerProfile(
                name,
                tpr=0.9,
                fpr=float(rng.uniform(0.0, 0.01)),
                flip_prob=0.002,
                exclusion_prob=float(rng.uniform(0.0, 0.002)),
                version_swap=(3, 0.05, 0.01),
            )
        )
    n_snapshots = 10
    for name in MEDIOCRE_NAMES:
        tpr = _mediocre_tpr(rng)
        fpr = float(rng.uniform(0.0, 0.1))
        flip = float(rng.uniform(0.001, 0.005))
        excl = float(rng.uniform(0.0, 0.002))
        swap = None
        # half of them get an engine update at some later snapshot, with fresh rates
        if rng.random() < MEDIOCRE_UPDATE_SHARE:
            swap = (int(rng.integers(1, n_snapshots)), _mediocre_tpr(rng), float(rng.uniform(0.0, 0.1)))
        profiles.append(ScannerProfile(name, tpr, fpr, flip, excl, swap))
    return SimConfig(
        scanners=tuple(profiles),
        n_apps=2000,
        malicious_fraction=0.5,
        snapshot_dates=biweekly_dates(date(2019, 1, 4), n_snapshots),
        q0=0.8,
        onset_lag=3,
        seed=seed,
        arrival_fraction=0.4,
    )


def _app_id(seed: int, i: int) -> str:
    return hashlib.sha256(f"maat-sim:{seed}:{i}".encode()).hexdigest()


def suppression(age: np.ndarray, q0: float, lag: int) -> np.ndarray:
    """Chance a would-be detection is withheld for a report ``age`` snapshot periods old."""
    age = np.asarray(age, dtype=np.float64)
    if lag == 0:
        return np.zeros_like(age)
    return q0 * np.clip(1.0 - age / lag, 0.0, 1.0)


def snapshot_period_days(dates: Sequence[date]) -> float:
    if len(dates) < 2:
        return float(DEFAULT_PERIOD_DAYS)
    return (dates[-1] - dates[0]).days / (len(dates) - 1)


def _draw_items(rng, own: Sequence[str], other: Sequence[str], k: int) -> frozenset:
    """``k`` distinct items, each taken from ``own`` with probability CLASS_MIXTURE."""
    from_own = int(rng.binomial(k, CLASS_MIXTURE)) if other else k
    from_own = min(from_own, len(own))
    from_other = min(k - from_own, len(other))
    picked = []
    if from_own:
        picked += [own[j] for j in rng.choice(len(own), from_own, replace=False)]
    if from_other:
        picked += [other[j] for j in rng.choice(len(other), from_other, replace=False)]
    return frozenset(picked)


def _split_vocab(vocab: Sequence[str], rng) -> Tuple[List[str], List[str]]:
    order = rng.permutation(len(vocab))
    half = len(vocab) // 2
    return [vocab[j] for j in order[:half]], [vocab[j] for j in order[half:]]


def app_specs(config: SimConfig) -> List[AppSpec]:
    out = []
    dates = config.snapshot_dates
    for i in range(config.n_apps):
        rng = np.random.default_rng([config.seed, 1, i])
        truth = Label.MALICIOUS if rng.random() < config.malicious_fraction else Label.BENIGN
        arrival = 0
        if len(dates) > 1 and rng.random() < config.arrival_fraction:
            arrival = int(rng.integers(1, len(dates)))
        if arrival == 0:
            first_seen = dates[0] - timedelta(days=int(rng.integers(0, config.max_age_days + 1)))
        else:
            # first seen somewhere after the previous snapshot, at the latest on arrival
            gap = (dates[arrival] - dates[arrival - 1]).days
            first_seen = dates[arrival] - timedelta(days=int(rng.integers(0, gap)))
        out.append(AppSpec(_app_id(config.seed, i), truth, first_seen, config.onset_lag, arrival))
    return out


def generate_corpus(config: SimConfig) -> Tuple[TimeSeriesCorpus, GroundTruth]:
    """Build the corpus and its ground truth; output depends only on ``config``.

    Every (app, scanner) pair has a baseline verdict drawn from the scanner's
    tpr/fpr (re-drawn when the scanner's engine is swapped). At each later
    snapshot the reported verdict deviates from that baseline with the
    scanner's flip probability. The scanner is left out of a report with its
    exclusion probability. Malicious detections are suppressed while a report
    is young: with chance ``q0`` when the app was just first seen, falling
    linearly to zero once it is ``onset_lag`` snapshot periods old.
    """
    config.validate()
    S = len(config.snapshot_dates)
    K = len(config.scanners)
    A = config.n_apps
    specs = app_specs(config)

    vocab_rng = np.random.default_rng([config.seed, 2])
    perm_mal, perm_ben = _split_vocab(config.permission_vocab, vocab_rng)
    tag_mal, tag_ben = _split_vocab(config.tag_vocab, vocab_rng)

    u_init = np.empty((A, K))
    u_flip = np.empty((A, S, K))
    u_excl = np.empty((A, S, K))
    u_supp = np.empty((A, S, K))
    u_swap = np.empty((A, K))
    submitted0 = np.empty(A, dtype=np.int64)
    perms, tags = [], []
    for i, spec in enumerate(specs):
        rng = np.random.default_rng([config.seed, 3, i])
        u_init[i] = rng.random(K)
        u_flip[i] = rng.random((S, K))
        u_excl[i] = rng.random((S, K))
        u_supp[i] = rng.random((S, K))
        u_swap[i] = rng.random(K)
        submitted0[i] = 1 + rng.poisson(1.0)
        own_p, other_p = (perm_mal, perm_ben) if spec.truth == Label.MALICIOUS else (perm_ben, perm_mal)
        own_t, other_t = (tag_mal, tag_ben) if spec.truth == Label.MALICIOUS else (tag_ben, tag_mal)
        perms.append(_draw_items(rng, own_p, other_p, config.permissions_per_app))
        tags.append(_draw_items(rng, own_t, other_t, config.tags_per_app))

    malicious = np.array([s.truth == Label.MALICIOUS for s in specs])
    arrival = np.array([s.arrival for s in specs])
    tpr = np.array([p.tpr for p in config.scanners])
    fpr = np.array([p.fpr for p in config.scanners])
    flip = np.array([p.flip_prob for p in config.scanners])
    excl = np.array([p.exclusion_prob for p in config.scanners])

    period = snapshot_period_days(config.snapshot_dates)
    baseline = u_init < np.where(malicious[:, None], tpr[None, :], fpr[None, :])
    detected = np.empty((S, A, K), dtype=bool)
    present = np.empty((S, A, K), dtype=bool)
    for s in range(S):
        for k, prof in enumerate(config.scanners):
            if prof.version_swap is not None and prof.version_swap[0] == s:
                _, t2, f2 = prof.version_swap
                baseline[:, k] = u_swap[:, k] < np.where(malicious, t2, f2)
        flipped = (u_flip[:, s, :] < flip[None, :]) & (s > arrival)[:, None]
        age = np.array([(config.snapshot_dates[s] - sp.first_seen).days for sp in specs]) / period
        q = suppression(age, config.q0, config.onset_lag)
        suppressed = (u_supp[:, s, :] < q[:, None]) & malicious[:, None]
        detected[s] = (baseline ^ flipped) & ~suppressed
        present[s] = u_excl[:, s, :] >= excl[None, :]

    names = [p.name for p in config.scanners]
    clean = ScannerResult(False)
    hit = ScannerResult(True)
    snapshots = []
    for s, when in enumerate(config.snapshot_dates):
        reports = {}
        for i, spec in enumerate(specs):
            if spec.arrival > s:
                continue
            row_d = detected[s, i]
            scans = {names[k]: (hit if row_d[k] else clean) for k in np.flatnonzero(present[s, i])}
            reports[spec.app_id] = ScanReport(
                app_id=spec.app_id,
                scan_date=when,
                first_seen=spec.first_seen,
                times_submitted=int(submitted0[i]) + s - spec.arrival,
                scans=scans,
                permissions=perms[i],
                tags=tags[i],
            )
        snapshots.append(Snapshot(when, reports))
    gt = GroundTruth({s.app_id: s.truth for s in specs})
    return TimeSeriesCorpus(tuple(snapshots)), gt


def profile_groups(config: SimConfig) -> dict:
    """Scanner names of a default-style config grouped by planted behavior."""
    groups = {"trusted": [], "unstable": [], "swap": [], "mediocre": []}
    for p in config.scanners:
        if p.name in TRUSTED_NAMES:
            groups["trusted"].append(p.name)
        elif p.name in UNSTABLE_NAMES:
            groups["unstable"].append(p.name)
        elif p.name in SWAP_NAMES:
            groups["swap"].append(p.name)
        else:
            groups["mediocre"].append(p.name)
    return groups


def gaussian_vectors(
    gt: GroundTruth,
    n_features: int = 8,
    separation: float = 1.5,
    benign_scale: float = 2.0,
    seed: int = 0,
) -> Tuple[List[str], np.ndarray]:
    """Stand-in downstream feature vectors: one Gaussian cluster per class.

    Malicious apps are drawn around ``separation`` in every coordinate with
    unit spread, benign ones around the origin with spread ``benign_scale``.
    Rows follow sorted app id order.
    """
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    ids = sorted(gt.labels)
    rng = np.random.default_rng([seed, 4])
    noise = rng.standard_normal((len(ids), n_features))
    mal = np.array([gt[a] == Label.MALICIOUS for a in ids])
    X = np.where(mal[:, None], separation + noise, benign_scale * noise)
    return ids, X
