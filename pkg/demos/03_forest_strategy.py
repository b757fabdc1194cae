"""
Learning a labeling strategy
============================

Instead of picking a threshold, train a random forest on scanner verdicts
from the first five snapshots and let it label the next five. Compare it
with the threshold that was optimal on snapshot 5 and with the per-date
optimum (which needs ground truth on every date, so it is only a
reference).

The forest here uses 30 trees and 5 folds to keep the demo quick; the
acceptance suite uses the full 100 trees and 10 folds.

Run: python3 demos/03_forest_strategy.py
"""

import numpy as np

from maat.forest import GridSearchConfig, render_tree
from maat.harness import BestThreshold, present_truth, timeseries_eval, train_strategy
from maat.reports import TimeSeriesCorpus
from maat.simulator import default_config, generate_corpus
from maat.strategies import CountThreshold, brute_force_threshold

corpus, gt = generate_corpus(default_config(seed=42))
train = TimeSeriesCorpus(corpus.snapshots[:5])
test = TimeSeriesCorpus(corpus.snapshots[5:])

# %% Train on naive verdict features, keeping only the informative scanners
strategy = train_strategy(
    train,
    gt.subset(train.app_ids()),
    "naive_selected",
    GridSearchConfig(n_estimators=30, folds=5, seed=42),
)
hp = strategy.forest.hyperparams
print(f"kept {len(strategy.schema)} scanners; chosen max_depth={hp['max_depth']}")
print("CV accuracy by depth:", {d: round(a, 4) for d, a in hp["grid"]})

# %% Snapshot-5 threshold frozen in time
s5 = corpus.snapshots[4]
t5, _ = brute_force_threshold(s5, present_truth(s5, gt))

lineup = [strategy, CountThreshold(t5), BestThreshold()]
rows = timeseries_eval(lineup, test, gt)
n = len(test)
print(f"\n{'strategy':<22} mean MCC   std")
for i, strat in enumerate(lineup):
    scores = np.array([r.mcc for r in rows[i * n : (i + 1) * n]])
    print(f"{strat.name:<22} {scores.mean():.4f}  {scores.std():.4f}")

# %% What does one tree look at?
tree = strategy.forest.trees[0]
print("\nfirst tree, top levels:")
print("\n".join(render_tree(tree, strategy.schema).splitlines()[:12]))
