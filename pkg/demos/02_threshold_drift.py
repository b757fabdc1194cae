"""
Fixed thresholds drift
======================

A threshold rule "malicious when at least t scanners flag it" is only
tuned for one moment. Brute-forcing the best t on every snapshot shows
how the optimum moves as scanners update their engines and new apps
mature.

Run: python3 demos/02_threshold_drift.py
"""

from maat.harness import BestThreshold, present_truth, timeseries_eval
from maat.simulator import default_config, generate_corpus
from maat.strategies import CountThreshold, PercentThreshold, brute_force_threshold, drebin_strategy

corpus, gt = generate_corpus(default_config(seed=42))

# %% The best count threshold, date by date
print("date        best t   MCC    apps")
for snap in corpus.snapshots:
    truth = present_truth(snap, gt)
    t, score = brute_force_threshold(snap, truth)
    print(f"{snap.date}  {t:>6}  {score:.4f}  {len(truth)}")

# %% Common fixed rules against the per-date optimum
lineup = [CountThreshold(1), CountThreshold(4), CountThreshold(10), PercentThreshold(0.5), drebin_strategy(), BestThreshold()]
rows = timeseries_eval(lineup, corpus, gt)
n = len(corpus)
print("\nstrategy    " + " ".join(d.strftime("%m-%d") for d in corpus.dates))
for i, strat in enumerate(lineup):
    scores = [r.mcc for r in rows[i * n : (i + 1) * n]]
    print(f"{strat.name:<11} " + " ".join(f"{s:5.3f}" for s in scores))
