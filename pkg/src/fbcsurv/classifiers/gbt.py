"""Newton-style gradient boosting with logistic loss (the XGBoost-family stand-in).

Each round fits a depth-limited regression tree to the per-row gradients and
hessians of the logistic loss; leaf weights carry an L2 penalty. No row or
column subsampling, so fits are fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .splits import BinnedMatrix
from .tree import TreeNode, grow_regression_tree, node_from_dict, node_to_dict, predict_values

_PRIOR_EPS = 1e-12


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _mean_logistic_loss(scores: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, scores) - y * scores))


@dataclass
class GbtEnsemble:
    init_score: float
    learning_rate: float
    trees: list[TreeNode] = field(default_factory=list)
    # mean training loss after 0, 1, ..., n rounds, recorded during fit
    train_losses: list[float] = field(default_factory=list)

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        scores = np.full(len(X), self.init_score, dtype=np.float64)
        for tree in self.trees:
            scores += self.learning_rate * predict_values(tree, X)
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        # probability > 0.5 means score > 0; exact 0.5 maps to class 0
        return (self.decision_scores(X) > 0).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "init_score": self.init_score,
            "learning_rate": self.learning_rate,
            "trees": [node_to_dict(t) for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtEnsemble":
        return cls(
            init_score=d["init_score"],
            learning_rate=d["learning_rate"],
            trees=[node_from_dict(t) for t in d["trees"]],
        )


def fit_gbt_ensemble(
    X: np.ndarray, y: np.ndarray, rounds: int, depth: int, learning_rate: float, l2: float
) -> GbtEnsemble:
    n = len(y)
    y_f = y.astype(np.float64)
    prior = min(max(float(y_f.mean()), _PRIOR_EPS), 1.0 - _PRIOR_EPS)
    init = math.log(prior / (1.0 - prior))
    ensemble = GbtEnsemble(init_score=init, learning_rate=learning_rate)
    bm = BinnedMatrix(np.asarray(X, dtype=np.int64))
    scores = np.full(n, init, dtype=np.float64)
    ensemble.train_losses.append(_mean_logistic_loss(scores, y_f))
    row_values = np.empty(n, dtype=np.float64)
    for _ in range(rounds):
        p = _sigmoid(scores)
        g = p - y_f
        h = p * (1.0 - p)
        tree = grow_regression_tree(bm, g, h, depth, l2, row_values)
        ensemble.trees.append(tree)
        scores = scores + learning_rate * row_values
        ensemble.train_losses.append(_mean_logistic_loss(scores, y_f))
    return ensemble
