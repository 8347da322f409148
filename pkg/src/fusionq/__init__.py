"""Weighted majority votes over classifier scores for late fusion.

MinCq and its pairwise ranking variants, fixed-rule baselines, an RBF
stacking layer, and the metrics used to compare them.
"""
from .exceptions import FusionError
from .mincq import predict, train, vote_scores
from .ranking import pairwise_loss, train_pw, train_pwav
from .types import (
    EvalReport,
    FusionModel,
    QpProblem,
    QpSolution,
    ScoreMatrix,
    SolverConfig,
    VoterWeights,
    derive_signed_weights,
    split_by_label,
)

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "FusionError",
    "FusionModel",
    "QpProblem",
    "QpSolution",
    "ScoreMatrix",
    "SolverConfig",
    "VoterWeights",
    "derive_signed_weights",
    "pairwise_loss",
    "predict",
    "split_by_label",
    "train",
    "train_pw",
    "train_pwav",
    "vote_scores",
]
