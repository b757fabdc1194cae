"""
Labels matter downstream
========================

A malware detector is only as good as its training labels. Train the
four small detectors on synthetic feature vectors labelled by ground
truth, by threshold strategies and by 30% random flips, and score them
on the same held-out apps.

Run: python3 demos/04_label_noise_downstream.py
"""

import numpy as np

from maat.harness import ClassifierKind, ClassifierSpec, GroundTruthStrategy, VectorSet, downstream_grid
from maat.reports import Label
from maat.simulator import default_config, gaussian_vectors, generate_corpus
from maat.strategies import CountThreshold, drebin_strategy


class Flipped:
    """Ground truth with a random 30% of training apps flipped."""

    name = "30% flipped"

    def __init__(self, gt, ids, seed=0):
        rng = np.random.default_rng(seed)
        self.gt = gt
        self.flipped = set(rng.choice(ids, size=int(0.3 * len(ids)), replace=False))

    def label(self, report):
        lab = self.gt[report.app_id]
        return Label(1 - int(lab)) if report.app_id in self.flipped else lab


corpus, gt = generate_corpus(default_config(seed=42))
snap = corpus.snapshots[-1]

# %% Stand-in app features: one Gaussian cluster per class
ids, X = gaussian_vectors(gt, n_features=8, seed=0)
rows = [i for i, a in enumerate(ids) if a in snap.reports]
cut = int(0.8 * len(rows))
train = VectorSet([ids[i] for i in rows[:cut]], X[rows[:cut]])
test = VectorSet([ids[i] for i in rows[cut:]], X[rows[cut:]])

strategies = [GroundTruthStrategy(gt), CountThreshold(1), CountThreshold(4), drebin_strategy(), Flipped(gt, train.app_ids)]
specs = [ClassifierSpec(k, knn_k_grid=(11, 26, 51), rf_trees_grid=(25, 50), folds=5) for k in ClassifierKind]

# %% Test MCC by labeling strategy and detector
results = downstream_grid(train, snap, strategies, test, gt, specs)
table = {(r.strategy, r.classifier): r.mcc for r in results}
kinds = [k.value for k in ClassifierKind]
print(f"{'labels':<13}" + "".join(f"{k:>11}" for k in kinds))
for s in strategies:
    print(f"{s.name:<13}" + "".join(f"{table[(s.name, k)]:>11.3f}" for k in kinds))
