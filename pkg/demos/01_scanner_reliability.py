"""
Which scanners can be trusted?
==============================

Simulate a scan platform with planted scanner profiles, then score every
scanner by correctness (agreement with ground truth) and certainty
(how consistently it labels the same app over time). The trusted set is
the intersection of the two, and should recover the planted reliable
profiles.

Run: python3 demos/01_scanner_reliability.py
"""

import numpy as np

from maat.scanners import certainty_scores, correctness_series, trusted_scanners
from maat.simulator import default_config, generate_corpus, profile_groups

# %% Simulate ten biweekly snapshots of 2000 apps scanned by 60 scanners
cfg = default_config(seed=42)
corpus, gt = generate_corpus(cfg)
groups = profile_groups(cfg)
print(f"{len(corpus)} snapshots, {len(gt)} apps, {len(corpus.scanner_names())} scanners")
for name, members in groups.items():
    print(f"  planted {name:<9} {len(members):>2}  e.g. {', '.join(sorted(members)[:3])}")

# %% Correctness per snapshot, averaged over time
series = correctness_series(corpus, gt)
overall = {name: s.overall for name, s in series.items()}

# %% Certainty: per app, the share of snapshots that agree with the mode
cert = {name: score.dataset_mean for name, score in certainty_scores(corpus).items()}

print("\nscanner            group      correctness  certainty")
group_of = {n: g for g, members in groups.items() for n in members}
for name in sorted(overall, key=overall.get, reverse=True)[:24]:
    print(f"{name:<18} {group_of.get(name, '?'):<10} {overall[name]:>10.3f}  {cert[name]:>9.3f}")

# %% Trusted = correct and stable
sets = trusted_scanners(corpus, gt)
print(f"\ncorrect: {len(sets.correct)}  stable: {len(sets.stable)}  trusted: {len(sets.trusted)}")
print("trusted == planted reliable profiles:", sets.trusted == frozenset(groups["trusted"]))
for name in groups["unstable"]:
    print(f"{name}: present in {np.mean([name in r.scans for s in corpus.snapshots for r in s.reports.values()]):.0%}"
          f" of reports, certainty {cert[name]:.3f}")
