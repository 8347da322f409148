"""RBF stacking layer over base-classifier score vectors.

Every training example becomes a voter ``k(., x_a) = exp(-gamma ||z - z_a||^2)``
on standardised score vectors ``z``. The expanded table is an ordinary
:class:`ScoreMatrix` and can be fed to any MinCq variant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import DegenerateStandardizationError, InvalidHyperparameterError, ShapeError
from .types import ScoreMatrix


def default_gamma_grid(n: int) -> list:
    return [2.0**k / n for k in range(-3, 4)]


@dataclass(frozen=True)
class KernelLayer:
    gamma: float
    anchors: np.ndarray  # standardised, shape (anchor_count, n)
    mean: np.ndarray
    std: np.ndarray
    voter_names: tuple  # base voters, i.e. expected input columns
    anchor_ids: tuple

    @property
    def anchor_count(self) -> int:
        return self.anchors.shape[0]

    @property
    def kernel_voter_names(self) -> tuple:
        return tuple(f"rbf:{a}" for a in self.anchor_ids)

    def standardize(self, scores) -> np.ndarray:
        return (np.asarray(scores, dtype=float) - self.mean) / self.std

    def transform(self, s: ScoreMatrix) -> ScoreMatrix:
        return transform(self, s)

    def __eq__(self, other):
        if not isinstance(other, KernelLayer):
            return NotImplemented
        return (
            self.gamma == other.gamma
            and self.voter_names == other.voter_names
            and self.anchor_ids == other.anchor_ids
            and all(np.array_equal(getattr(self, f), getattr(other, f))
                    for f in ("anchors", "mean", "std"))
        )

    __hash__ = None


def fit(s_train: ScoreMatrix, gamma: float, max_anchors: int = None, seed: int = 0) -> KernelLayer:
    """Standardise on ``s_train`` and keep its rows as kernel anchors.

    With ``max_anchors`` smaller than the sample, a uniform subsample of rows
    (fixed by ``seed``, kept in row order) is used as anchors; the
    standardisation statistics always use the whole sample.
    """
    if not gamma > 0:
        raise InvalidHyperparameterError(f"gamma must be positive, got {gamma}")
    mean = s_train.scores.mean(axis=0)
    std = s_train.scores.std(axis=0)
    constant = np.flatnonzero(~(std > 0))
    if constant.size:
        raise DegenerateStandardizationError(
            f"voter {s_train.voter_names[constant[0]]!r} is constant on the training sample")
    rows = np.arange(s_train.m)
    if max_anchors is not None and max_anchors < s_train.m:
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(s_train.m, size=max_anchors, replace=False))
    anchors = (s_train.scores[rows] - mean) / std
    for a in (anchors, mean, std):
        a.setflags(write=False)
    return KernelLayer(
        gamma=float(gamma),
        anchors=anchors,
        mean=mean,
        std=std,
        voter_names=s_train.voter_names,
        anchor_ids=tuple(s_train.example_ids[j] for j in rows),
    )


def transform(layer: KernelLayer, s: ScoreMatrix) -> ScoreMatrix:
    if s.n != len(layer.voter_names):
        raise ShapeError(f"kernel layer expects {len(layer.voter_names)} voters, data has {s.n}")
    z = layer.standardize(s.scores)
    K = np.exp(-layer.gamma * cdist(z, layer.anchors, "sqeuclidean"))
    return ScoreMatrix(K, s.labels, layer.kernel_voter_names, s.example_ids)
