"""Discrete AdaBoost (SAMME, two classes) over depth-1 decision stumps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .splits import BinnedMatrix, argbest

_EPS = 1e-10


@dataclass
class Stump:
    """Single-split weak learner; feature None means a constant prediction."""

    feature: int | None
    threshold: float | None
    left_class: int
    right_class: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.feature is None:
            return np.full(len(X), self.left_class, dtype=np.int64)
        mask = X[:, self.feature] <= self.threshold
        return np.where(mask, self.left_class, self.right_class).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left_class": self.left_class,
            "right_class": self.right_class,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Stump":
        return cls(d["feature"], d["threshold"], d["left_class"], d["right_class"])


def _best_stump_binned(bm: BinnedMatrix, y: np.ndarray, w: np.ndarray) -> tuple[Stump, float]:
    w1_total = float(w[y == 1].sum())
    w0_total = float(w.sum()) - w1_total
    majority = 1 if w1_total > w0_total else 0
    constant = Stump(feature=None, threshold=None, left_class=majority, right_class=majority)
    constant_err = min(w0_total, w1_total)
    w1 = np.where(y == 1, w, 0.0)
    counts, _, (lw1, lw), valid = bm.scan(np.arange(len(y)), (w1, w))
    best = argbest(np.minimum(lw - lw1, lw1) + np.minimum(w0_total - (lw - lw1), w1_total - lw1), valid, maximize=False)
    if best is None:
        return constant, constant_err
    lw0_b = float(lw[best] - lw1[best])
    lw1_b = float(lw1[best])
    rw0_b = w0_total - lw0_b
    rw1_b = w1_total - lw1_b
    err = min(lw0_b, lw1_b) + min(rw0_b, rw1_b)
    if err >= constant_err:
        return constant, constant_err
    feature, threshold = bm.split_at(best, counts)
    stump = Stump(
        feature=feature,
        threshold=threshold,
        left_class=1 if lw1_b > lw0_b else 0,
        right_class=1 if rw1_b > rw0_b else 0,
    )
    return stump, err


def best_stump(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[Stump, float]:
    """Minimum-weighted-error stump; ties keep the lowest feature, then threshold.

    The constant majority stump wins ties and covers data with no usable split.
    """
    return _best_stump_binned(BinnedMatrix(np.asarray(X, dtype=np.int64)), y, w)


@dataclass
class AdaBoostEnsemble:
    stumps: list[Stump] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    fallback_class: int = 0
    # per-round diagnostics, recorded during fit
    weighted_errors: list[float] = field(default_factory=list)
    weight_sums: list[float] = field(default_factory=list)

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        scores = np.zeros(len(X), dtype=np.float64)
        for stump, alpha in zip(self.stumps, self.alphas):
            scores += alpha * (2.0 * stump.predict(X) - 1.0)
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        if not self.stumps:
            return np.full(len(X), self.fallback_class, dtype=np.int64)
        return (self.decision_scores(X) > 0).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "stumps": [s.to_dict() for s in self.stumps],
            "alphas": self.alphas,
            "fallback_class": self.fallback_class,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdaBoostEnsemble":
        return cls(
            stumps=[Stump.from_dict(s) for s in d["stumps"]],
            alphas=list(d["alphas"]),
            fallback_class=d["fallback_class"],
        )


def fit_adaboost_ensemble(X: np.ndarray, y: np.ndarray, rounds: int) -> AdaBoostEnsemble:
    """Boost stumps with SAMME weight updates (alpha = log((1-err)/err) for 2 classes).

    Stops early on a perfect stump (kept, with the error clamped to eps for a
    large finite alpha) or when the weighted error reaches 0.5.
    """
    n = len(y)
    ensemble = AdaBoostEnsemble(fallback_class=1 if int(y.sum()) * 2 > n else 0)
    bm = BinnedMatrix(np.asarray(X, dtype=np.int64))
    w = np.full(n, 1.0 / n, dtype=np.float64)
    for _ in range(rounds):
        stump, _ = _best_stump_binned(bm, y, w)
        miss = stump.predict(X) != y
        err = float(w[miss].sum())
        if err >= 0.5:
            break
        ensemble.weighted_errors.append(err)
        if err <= 0.0:
            ensemble.stumps.append(stump)
            ensemble.alphas.append(math.log((1.0 - _EPS) / _EPS))
            ensemble.weight_sums.append(float(w.sum()))
            break
        alpha = math.log((1.0 - err) / err)
        ensemble.stumps.append(stump)
        ensemble.alphas.append(alpha)
        w = w * np.exp(alpha * miss)
        w = w / w.sum()
        ensemble.weight_sums.append(float(w.sum()))
    return ensemble
