"""Evaluation quantities for majority votes.

Ranking convention used by :func:`precision_at` and
:func:`mean_average_precision`: examples are sorted by decreasing score and
ties keep ascending example index.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import special

from .exceptions import (
    DegenerateError,
    DegenerateTestError,
    EmptySampleError,
    ShapeError,
    UndefinedBoundError,
    UndefinedMAPError,
)
from .types import EvalReport, ScoreMatrix, VoterWeights


def _pair(scores, labels):
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeError(f"{len(scores)} scores for {len(labels)} labels")
    if scores.size == 0:
        raise EmptySampleError("empty sample")
    return scores, labels


def empirical_risk(vote_scores, labels) -> float:
    """Fraction of examples with ``y H(x) <= 0``; a zero margin is an error."""
    h, y = _pair(vote_scores, labels)
    return float(np.mean(y * h <= 0))


class Moments(NamedTuple):
    first: float
    second: float


def margin_moments(vote_scores, labels) -> Moments:
    h, y = _pair(vote_scores, labels)
    margin = y * h
    return Moments(float(margin.mean()), float(np.mean(margin**2)))


def c_bound(first: float, second: float) -> float:
    """``1 - first**2 / second``, an upper bound on the vote's risk when ``first > 0``."""
    if not first > 0:
        raise UndefinedBoundError(f"C-bound needs a positive first moment, got {first}")
    if not second > 0:
        raise DegenerateError("C-bound undefined for a zero second moment")
    return float(1.0 - first**2 / second)


def diversity_matrix(s: ScoreMatrix) -> np.ndarray:
    """Pairwise agreement ``mean_j h_i(x_j) h_k(x_j)`` of every pair of voters."""
    H = s.scores
    return (H.T @ H) / H.shape[0]


def second_moment_via_diversity(weights, div) -> float:
    q = weights.q if isinstance(weights, VoterWeights) else np.asarray(weights, dtype=float)
    div = np.asarray(div, dtype=float)
    if div.shape != (len(q), len(q)):
        raise ShapeError(f"diversity matrix {div.shape} does not match {len(q)} weights")
    return float(q @ div @ q)


def ranking_order(scores) -> np.ndarray:
    """Indices sorted by decreasing score, ties by increasing index."""
    return np.argsort(-np.asarray(scores, dtype=float), kind="stable")


def precision_at(scores, labels, j: int) -> float:
    h, y = _pair(scores, labels)
    if not 1 <= j <= len(h):
        raise ValueError(f"rank {j} outside 1..{len(h)}")
    top = ranking_order(h)[:j]
    return float(np.mean(y[top] == 1))


def mean_average_precision(scores, labels) -> float:
    """Mean of Prec@rank over the ranks of all positive examples."""
    h, y = _pair(scores, labels)
    hits = y[ranking_order(h)] == 1
    if not hits.any():
        raise UndefinedMAPError("MAP is undefined without positive examples")
    ranks = np.flatnonzero(hits) + 1
    precisions = np.arange(1, len(ranks) + 1) / ranks
    return math.fsum(precisions) / len(ranks)


class TTest(NamedTuple):
    t_stat: float
    p_value: float


def paired_t_test(metric_a, metric_b) -> TTest:
    """Two-sided Student paired t-test of ``a - b``."""
    a = np.asarray(metric_a, dtype=float)
    b = np.asarray(metric_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError("paired samples must be 1-d and of equal length")
    if len(a) < 2:
        raise DegenerateTestError("a paired t-test needs at least two pairs")
    d = a - b
    sd = d.std(ddof=1)
    if not sd > 0:
        raise DegenerateTestError("differences have zero variance")
    df = len(d) - 1
    t = d.mean() / (sd / np.sqrt(len(d)))
    p = special.betainc(df / 2.0, 0.5, df / (df + t * t))
    return TTest(float(t), float(p))


def evaluate(vote: np.ndarray, s: ScoreMatrix, voters: ScoreMatrix = None) -> EvalReport:
    """Risk, MAP, margin moments, C-bound and voter diversity of a vote on ``s``.

    ``voters`` selects the score table whose diversity is reported (kernel
    voters for a kernel model); it defaults to ``s``.
    """
    first, second = margin_moments(vote, s.labels)
    try:
        cb = c_bound(first, second)
    except DegenerateError:
        cb = None
    try:
        map_ = mean_average_precision(vote, s.labels)
    except UndefinedMAPError:
        map_ = float("nan")
    return EvalReport(
        risk=empirical_risk(vote, s.labels),
        map=map_,
        first_moment=first,
        second_moment=second,
        c_bound=cb,
        diversity=diversity_matrix(voters if voters is not None else s),
    )
