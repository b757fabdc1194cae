"""Small downstream detectors: k-nearest neighbours, Gaussian naive Bayes and a linear SVM.

All of them take a float feature matrix and 0/1 labels (1 = malicious) and
predict 0/1 arrays; ties always resolve to benign.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..reports import Label

VAR_FLOOR = 1e-9
# rows of the test matrix handled per distance block
_KNN_BLOCK = 256


def _xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one label per row")
    if len(y) and not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return X, y


def _both_classes(y, who: str) -> None:
    if len(np.unique(y)) < 2:
        raise ValueError(f"{who} needs both classes in the training labels")


# -- k nearest neighbours --------------------------------------------------


def knn_predict_many(train_X, train_y, X, k: int) -> np.ndarray:
    """Majority label of the ``k`` nearest training rows (Euclidean).

    Equal distances are ordered by training row index and a split vote is
    benign.
    """
    train_X, train_y = _xy(train_X, train_y)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = len(train_y)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}] (got {k})")
    if X.shape[1] != train_X.shape[1]:
        raise ValueError("feature count differs from the training data")
    out = np.empty(len(X), dtype=np.int64)
    for lo in range(0, len(X), _KNN_BLOCK):
        block = X[lo : lo + _KNN_BLOCK]
        # explicit differences, no |a|^2 - 2ab + |b|^2 shortcut: exact ties must stay ties
        d2 = ((block[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        votes = train_y[nearest].sum(axis=1)
        out[lo : lo + len(block)] = (2 * votes > k).astype(np.int64)
    return out


def knn_predict(train_X, train_y, x, k: int) -> Label:
    return Label(int(knn_predict_many(train_X, train_y, np.asarray(x, dtype=np.float64)[None, :], k)[0]))


# -- Gaussian naive Bayes --------------------------------------------------


@dataclass(frozen=True)
class GaussianNB:
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)
    log_prior: np.ndarray  # (2,)

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((len(X), 2))
        for c in (0, 1):
            var = self.variances[c]
            dens = -0.5 * np.log(2.0 * np.pi * var) - (X - self.means[c]) ** 2 / (2.0 * var)
            out[:, c] = self.log_prior[c] + dens.sum(axis=1)
        return out

    def predict(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return (jll[:, 1] > jll[:, 0]).astype(np.int64)


def gnb_fit(train_X, train_y) -> GaussianNB:
    X, y = _xy(train_X, train_y)
    _both_classes(y, "Gaussian naive Bayes")
    max_var = float(X.var(axis=0).max()) if X.shape[1] else 0.0
    floor = VAR_FLOOR * max_var if max_var > 0 else VAR_FLOOR
    means = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.maximum(np.vstack([X[y == c].var(axis=0) for c in (0, 1)]), floor)
    counts = np.bincount(y, minlength=2)
    return GaussianNB(means, variances, np.log(counts / counts.sum()))


def gnb_predict(model: GaussianNB, x) -> Label:
    return Label(int(model.predict(np.asarray(x, dtype=np.float64)[None, :])[0]))


# -- linear SVM ------------------------------------------------------------


@dataclass(frozen=True)
class LinearSVM:
    weights: np.ndarray
    bias: float

    def decision(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=np.float64)) @ self.weights + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision(X) > 0).astype(np.int64)


def _hinge_bias(scores: np.ndarray, s: np.ndarray) -> float:
    """Exact minimiser of sum(max(0, 1 - s*(score + b))) over b (middle of the flat optimum)."""
    # positives contribute max(0, p - b), negatives max(0, b - q)
    p = np.sort(1.0 - scores[s > 0])
    q = np.sort(-1.0 - scores[s < 0])
    p_cum = np.concatenate([[0.0], np.cumsum(p[::-1])])  # sums of the largest p values
    q_cum = np.concatenate([[0.0], np.cumsum(q)])
    cand = np.concatenate([p, q])
    n_above = len(p) - np.searchsorted(p, cand, side="right")
    n_below = np.searchsorted(q, cand, side="left")
    loss = (p_cum[n_above] - n_above * cand) + (n_below * cand - q_cum[n_below])
    best = loss.min()
    tied = cand[loss <= best + 1e-12 * (1.0 + abs(best))]
    return float((tied.min() + tied.max()) / 2.0)


def linear_svm_fit(train_X, train_y, lam: float = 1e-4, epochs: int = 20, seed: int = 0) -> LinearSVM:
    """L2-regularised hinge loss by stochastic subgradient descent with step 1/(lam*t).

    The weights are learned with a constant column appended; the intercept
    is then re-fitted exactly (it is not regularised) with the weights fixed.
    The constant is the RMS row norm, so rescaling X by c and lam by c**2
    leaves every margin unchanged.
    """
    X, y = _xy(train_X, train_y)
    _both_classes(y, "linear SVM")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    s = np.where(y == 1, 1.0, -1.0)
    scale = float(np.sqrt(np.mean(np.sum(X * X, axis=1)))) if X.size else 0.0
    Xa = np.hstack([X, np.full((len(X), 1), scale if scale > 0 else 1.0)])
    w = np.zeros(Xa.shape[1])
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(len(y)):
            t += 1
            eta = 1.0 / (lam * t)
            margin = s[i] * (Xa[i] @ w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * s[i] * Xa[i]
    weights = w[:-1].copy()
    return LinearSVM(weights, _hinge_bias(X @ weights, s))


def linear_svm_predict(model: LinearSVM, x) -> Label:
    return Label(int(model.predict(np.asarray(x, dtype=np.float64)[None, :])[0]))
