"""Stacking split, stratified k-fold cross-validation and model fitting.

Hyperparameters are selected by mean validation MAP. Grid points whose
training fails because the margin is infeasible (or the QP does not
converge) are skipped and recorded rather than aborting the search.
"""
from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import baselines, kernel, mincq, ranking
from .exceptions import (
    ConvergenceError,
    DataError,
    InfeasibleMarginError,
    InvalidHyperparameterError,
    NoFeasibleModelError,
    StratificationError,
)
from .metrics import mean_average_precision
from .types import ALGORITHMS, FusionModel, ScoreMatrix, SolverConfig

log = logging.getLogger(__name__)

PARAM_ORDER = ("mu", "beta", "gamma")
DEFAULT_MU_GRID = (0.0001, 0.001, 0.01, 0.1)
DEFAULT_BETA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
_SKIPPABLE = (InfeasibleMarginError, ConvergenceError)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("FUSIONQ_THREADS", "1")))
    except ValueError:
        return 1


def _interleave(labels, seed):
    """Rows ordered as shuffled positives followed by shuffled negatives."""
    rng = np.random.default_rng(seed)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == -1)
    return np.concatenate([rng.permutation(pos), rng.permutation(neg)])


class StackingSplit(NamedTuple):
    s_prime: ScoreMatrix
    s_fusion: ScoreMatrix


def stacking_split(s: ScoreMatrix, seed: int, require_positives: bool = False) -> StackingSplit:
    """Split ``s`` into two label-stratified halves.

    ``s_prime`` is meant for training the base classifiers and ``s_fusion``
    for learning the vote. Rows keep their original order inside each half.
    """
    if s.m < 2:
        raise DataError("a stacking split needs at least two examples")
    order = _interleave(s.labels, seed)
    halves = [np.sort(order[k::2]) for k in (0, 1)]
    if require_positives and any(not np.any(s.labels[h] == 1) for h in halves):
        raise StratificationError("one half of the split has no positive example")
    return StackingSplit(s.take(halves[0]), s.take(halves[1]))


def stratified_folds(labels, folds: int, seed: int) -> list:
    """Validation row indices of each fold, class proportions balanced."""
    labels = np.asarray(labels)
    if folds < 2:
        raise InvalidHyperparameterError("at least two folds are required")
    if len(labels) < folds:
        raise StratificationError(f"{len(labels)} examples cannot fill {folds} folds")
    order = _interleave(labels, seed)
    return [np.sort(order[k::folds]) for k in range(folds)]


def expand_grid(grid: Mapping[str, Sequence[float]]) -> list:
    unknown = set(grid) - set(PARAM_ORDER)
    if unknown:
        raise InvalidHyperparameterError(f"unknown hyperparameters {sorted(unknown)}")
    keys = [k for k in PARAM_ORDER if k in grid]
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def fit(s: ScoreMatrix, algorithm: str, params: Mapping[str, float] = None,
        cfg: SolverConfig = None, max_anchors: int = None, seed: int = 0,
        max_slacks: int = ranking.DEFAULT_MAX_SLACKS) -> FusionModel:
    """Train ``algorithm`` on ``s``; a ``gamma`` entry adds an RBF kernel layer."""
    params = dict(params or {})
    if algorithm not in ALGORITHMS:
        raise InvalidHyperparameterError(f"unknown algorithm {algorithm!r}")
    if algorithm not in ("mincq", "mincq_pw", "mincq_pwav"):
        if params:
            raise InvalidHyperparameterError(f"{algorithm} takes no hyperparameters")
        return baselines.train_baseline(algorithm, s)

    layer = None
    data = s
    if "gamma" in params:
        layer = kernel.fit(s, params["gamma"], max_anchors=max_anchors, seed=seed)
        data = layer.transform(s)
    mu = params.get("mu", DEFAULT_MU_GRID[2])
    if algorithm == "mincq":
        model = mincq.train(data, mu, cfg)
    elif algorithm == "mincq_pw":
        model = ranking.train_pw(data, mu, params.get("beta", 1.0), cfg, max_slacks)
    else:
        model = ranking.train_pwav(data, mu, params.get("beta", 1.0), cfg)
    hyper = dict(model.hyperparams)
    if layer is not None:
        hyper["gamma"] = float(params["gamma"])
    return FusionModel(model.algorithm, model.weights, model.voter_names, hyper, layer)


@dataclass(frozen=True)
class CvResult:
    best_params: dict
    cv_map_table: np.ndarray  # grid points x folds, nan where training failed
    grid_points: list
    skipped: list = field(default_factory=list)  # (grid index, reason)

    def mean_maps(self) -> np.ndarray:
        return self.cv_map_table.mean(axis=1)


def _fold_map(s, algorithm, params, train_rows, val_rows, cfg, max_anchors, seed, max_slacks):
    model = fit(s.take(train_rows), algorithm, params, cfg, max_anchors, seed, max_slacks)
    val = s.take(val_rows)
    return mean_average_precision(mincq.vote_scores(model, val), val.labels)


def cross_validate(s: ScoreMatrix, algorithm: str, grid: Mapping[str, Sequence[float]],
                   folds: int = 5, seed: int = 0, cfg: SolverConfig = None,
                   max_anchors: int = None, threads: int = None,
                   max_slacks: int = ranking.DEFAULT_MAX_SLACKS) -> CvResult:
    """Pick the grid point with the best mean validation MAP.

    Ties resolve to the earliest grid point; the grid is expanded in the
    order mu, beta, gamma with values in the order given.
    """
    points = expand_grid(grid)
    if not points:
        points = [{}]
    val_sets = stratified_folds(s.labels, folds, seed)
    for k, rows in enumerate(val_sets):
        if not np.any(s.labels[rows] == 1):
            raise StratificationError(f"validation fold {k} has no positive example")
    all_rows = np.arange(s.m)
    train_sets = [np.setdiff1d(all_rows, v) for v in val_sets]

    tasks = [(g, k) for g in range(len(points)) for k in range(folds)]

    def run(task):
        g, k = task
        try:
            return task, _fold_map(s, algorithm, points[g], train_sets[k], val_sets[k],
                                   cfg, max_anchors, seed, max_slacks), None
        except _SKIPPABLE as exc:
            return task, float("nan"), str(exc)

    workers = threads or thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    table = np.full((len(points), folds), np.nan)
    reasons = {}
    for (g, k), value, reason in results:
        table[g, k] = value
        if reason is not None:
            reasons.setdefault(g, reason)
    skipped = sorted(reasons.items())
    for g, reason in skipped:
        table[g, :] = np.nan
        log.info("skipping grid point %s: %s", points[g], reason)

    means = table.mean(axis=1)
    if np.all(np.isnan(means)):
        raise NoFeasibleModelError("training failed for every grid point")
    best = int(np.nanargmax(means))  # first maximum
    return CvResult(points[best], table, points, skipped)


def train_with_cv(s: ScoreMatrix, algorithm: str, grid: Mapping[str, Sequence[float]],
                  folds: int = 5, seed: int = 0, cfg: SolverConfig = None,
                  max_anchors: int = None, threads: int = None,
                  max_slacks: int = ranking.DEFAULT_MAX_SLACKS):
    """Cross-validate, then retrain on all of ``s`` with the selected parameters."""
    cv = cross_validate(s, algorithm, grid, folds, seed, cfg, max_anchors, threads, max_slacks)
    return fit(s, algorithm, cv.best_params, cfg, max_anchors, seed, max_slacks), cv
