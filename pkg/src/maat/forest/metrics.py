"""Binary confusion counts and the Matthews correlation coefficient.

Malicious is the positive class throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n if self.n else 0.0

    @classmethod
    def from_labels(cls, y_true: Iterable[int], y_pred: Iterable[int]) -> "ConfusionCounts":
        t = np.asarray(list(y_true) if not isinstance(y_true, np.ndarray) else y_true, dtype=bool)
        p = np.asarray(list(y_pred) if not isinstance(y_pred, np.ndarray) else y_pred, dtype=bool)
        if t.shape != p.shape:
            raise ValueError("label vectors differ in length")
        return cls(
            tp=int(np.sum(t & p)),
            fp=int(np.sum(~t & p)),
            tn=int(np.sum(~t & ~p)),
            fn=int(np.sum(t & ~p)),
        )


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation coefficient; 0.0 whenever a denominator factor is 0."""
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    # integer numerator and denominator keep the result order-independent
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def accuracy(y_true, y_pred) -> float:
    return ConfusionCounts.from_labels(y_true, y_pred).accuracy
