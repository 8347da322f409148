"""Fixed and MAP-driven fusion rules used as comparison points.

Ties between voters always resolve to the lowest voter index.
"""
from __future__ import annotations

import math

import numpy as np

from .exceptions import DegenerateError
from .metrics import mean_average_precision
from .types import FusionModel, ScoreMatrix


def sum_vote(s_eval: ScoreMatrix) -> np.ndarray:
    return s_eval.scores.sum(axis=1)


def voter_maps(s_train: ScoreMatrix) -> np.ndarray:
    return np.array([mean_average_precision(s_train.scores[:, i], s_train.labels)
                     for i in range(s_train.n)])


def map_weights(s_train: ScoreMatrix) -> np.ndarray:
    """Training MAPs of the voters normalised to sum to one."""
    maps = voter_maps(s_train)
    total = math.fsum(maps)
    if not total > 0:
        raise DegenerateError("all voters have zero training MAP")
    w = np.array([v / total for v in maps])
    # renormalise so the float sum is one; the residual goes to the largest weight
    k = int(np.argmax(w))
    w[k] = 1.0 - math.fsum(np.delete(w, k))
    return w


def map_weighted_vote(s_train: ScoreMatrix, s_eval: ScoreMatrix) -> np.ndarray:
    return s_eval.scores @ map_weights(s_train)


def best_confidence_vote(s_eval: ScoreMatrix) -> np.ndarray:
    """Per row, the signed score of the voter with the largest absolute score."""
    H = s_eval.scores
    pick = np.argmax(np.abs(H), axis=1)  # first maximum wins ties
    return H[np.arange(len(H)), pick]


def h_best(s_train: ScoreMatrix) -> int:
    """Index of the voter with the highest training MAP."""
    return int(np.argmax(voter_maps(s_train)))


def train_baseline(algorithm: str, s_train: ScoreMatrix) -> FusionModel:
    n = s_train.n
    if algorithm == "sum":
        w = np.ones(n)
    elif algorithm == "map_weighted":
        w = map_weights(s_train)
    elif algorithm == "best_confidence":
        w = np.ones(n)  # unused by the rule; kept so the model lists its voters
    elif algorithm == "h_best":
        w = np.zeros(n)
        w[h_best(s_train)] = 1.0
    else:
        raise ValueError(f"{algorithm!r} is not a baseline")
    return FusionModel(algorithm=algorithm, weights=w, voter_names=s_train.voter_names)
