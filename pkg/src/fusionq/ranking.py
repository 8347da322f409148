"""Ranking extensions of MinCq with pairwise preference slacks.

Both programs keep the MinCq objective, margin equality and weight box, and
add ``beta * sum(xi)`` to the objective with one slack per preference
constraint:

* ``mincq_pw``: one slack per (positive, negative) pair,
  ``xi_pn >= (H(x_n) - H(x_p)) / (m+ m-)``;
* ``mincq_pwav``: one slack per positive example,
  ``xi_p >= sum_n (H(x_n) - H(x_p)) / (m+ m-)``.

For fixed weights the optimal slacks are the hinges of these right-hand
sides, so ``sum(xi_pw)`` is exactly the pairwise hinge loss of the vote.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import mincq
from .exceptions import InvalidHyperparameterError, MissingClassError, ProblemTooLargeError
from .types import FusionModel, QpProblem, ScoreMatrix, SolverConfig, split_by_label

DEFAULT_MAX_SLACKS = 250_000


@dataclass(frozen=True)
class PairwiseAssembly:
    base: mincq.MincqAssembly
    beta: float
    averaged: bool
    slack_count: int
    # Row k is d_k = sum over the pairs of constraint k of h(x_n) - h(x_p).
    differences: np.ndarray
    scale: float  # 1 / (m+ m-)

    def constraint_rows(self, unit: float = 1.0):
        """``(G, rhs)`` over (q', xi / unit) for ``G [q'; xi / unit] <= rhs``."""
        n, k = self.base.n, self.slack_count
        coef = 2.0 * (self.scale / unit) * self.differences
        rhs = (self.scale / unit) * self.differences.sum(axis=1) / n
        G = sp.hstack([sp.csr_matrix(coef), -sp.eye(k, format="csr")], format="csr")
        return G, rhs


def _classes(s: ScoreMatrix):
    split = split_by_label(s)
    if split.m_pos == 0 or split.m_neg == 0:
        raise MissingClassError(
            f"ranking needs both classes (got {split.m_pos} positive, {split.m_neg} negative)")
    return split


def assemble(s: ScoreMatrix, mu: float, beta: float, averaged: bool,
             max_slacks: int = DEFAULT_MAX_SLACKS) -> PairwiseAssembly:
    if not beta > 0:
        raise InvalidHyperparameterError(f"beta must be positive, got {beta}")
    base = mincq.assemble(s, mu)
    split = _classes(s)
    pos = s.scores[split.positive_rows]
    neg = s.scores[split.negative_rows]
    mp, mn = len(pos), len(neg)
    if averaged:
        diffs = neg.sum(axis=0)[None, :] - mn * pos
    else:
        if mp * mn > max_slacks:
            raise ProblemTooLargeError(
                f"{mp}x{mn}={mp * mn} pairwise slacks exceed the cap of {max_slacks}; "
                "use mincq_pwav, which needs one slack per positive example")
        diffs = (neg[None, :, :] - pos[:, None, :]).reshape(mp * mn, s.n)
    return PairwiseAssembly(base, float(beta), averaged, len(diffs), diffs, 1.0 / (mp * mn))


def to_qp(asm: PairwiseAssembly, unit: float = 1.0) -> QpProblem:
    """QP over ``(q', xi / unit)``.

    With ``unit = asm.scale`` the slacks are measured in vote-score units
    instead of shares of ``1 / (m+ m-)``, which keeps them well above solver
    tolerances on large samples. The optimal ``q'`` does not depend on it.
    """
    n, k = asm.base.n, asm.slack_count
    base = mincq.to_qp(asm.base)
    P = sp.block_diag([sp.csr_matrix(base.quadratic), sp.csr_matrix((k, k))], format="csc")
    G, h = asm.constraint_rows(unit)
    return QpProblem(
        quadratic=P,
        linear=np.concatenate([base.linear, np.full(k, asm.beta * unit)]),
        eq_matrix=sp.hstack([sp.csr_matrix(base.eq_matrix), sp.csr_matrix((1, k))], format="csr"),
        eq_rhs=base.eq_rhs,
        ineq_matrix=G,
        ineq_rhs=h,
        lower=np.concatenate([np.zeros(n), np.zeros(k)]),
        upper=np.concatenate([np.full(n, 1.0 / n), np.full(k, np.inf)]),
    )


def _train(s, mu, beta, cfg, averaged, max_slacks):
    cfg = cfg or SolverConfig()
    asm = assemble(s, mu, beta, averaged, max_slacks)
    mincq.check_margin_feasible(asm.base)
    sol = mincq.solve_checked(to_qp(asm, unit=asm.scale), cfg, asm.base)
    return FusionModel(
        algorithm="mincq_pwav" if averaged else "mincq_pw",
        weights=mincq.weights_from_solution(sol.z_star, s.n),
        voter_names=s.voter_names,
        hyperparams={"mu": float(mu), "beta": float(beta)},
    )


def train_pw(s: ScoreMatrix, mu: float, beta: float, cfg: SolverConfig = None,
             max_slacks: int = DEFAULT_MAX_SLACKS) -> FusionModel:
    """MinCq with one hinge slack per positive-negative pair.

    The number of slacks grows as ``m+ * m-``; above ``max_slacks`` a
    :class:`ProblemTooLargeError` is raised instead of building the QP.
    """
    return _train(s, mu, beta, cfg, False, max_slacks)


def train_pwav(s: ScoreMatrix, mu: float, beta: float, cfg: SolverConfig = None) -> FusionModel:
    """MinCq with one slack per positive example against the mean negative."""
    return _train(s, mu, beta, cfg, True, None)


def _vote_by_class(q, s: ScoreMatrix):
    split = _classes(s)
    h = s.scores @ np.asarray(q, dtype=float)
    return h[split.positive_rows], h[split.negative_rows]


def pw_slacks(q, s: ScoreMatrix) -> np.ndarray:
    """Optimal pairwise slacks for signed weights ``q``, positive-major order."""
    hp, hn = _vote_by_class(q, s)
    return np.maximum(hn[None, :] - hp[:, None], 0.0).ravel() / (len(hp) * len(hn))


def pwav_slacks(q, s: ScoreMatrix) -> np.ndarray:
    """Optimal averaged slacks (one per positive) for signed weights ``q``."""
    hp, hn = _vote_by_class(q, s)
    return np.maximum((hn.sum() - len(hn) * hp) / (len(hp) * len(hn)), 0.0)


def slack_totals(q, s: ScoreMatrix, chunk: int = 4096) -> tuple:
    """``(pw total, pwav total)`` of the optimal slacks for signed weights ``q``.

    Both totals are reduced along the same summation tree, so the ordering
    ``pwav <= pw`` that holds in exact arithmetic also holds in floating point.
    """
    hp, hn = _vote_by_class(q, s)
    scale = len(hp) * len(hn)
    pw_rows, pwav_rows = [], []
    for start in range(0, len(hp), chunk):
        d = hn[None, :] - hp[start:start + chunk, None]
        pw_rows.append(np.maximum(d, 0.0).sum(axis=1))
        pwav_rows.append(np.maximum(d.sum(axis=1), 0.0))
    return (float((np.concatenate(pw_rows) / scale).sum()),
            float((np.concatenate(pwav_rows) / scale).sum()))


def pairwise_loss(model: FusionModel, s: ScoreMatrix) -> float:
    """Mean hinge ``[H(x_n) - H(x_p)]_+`` over all positive-negative pairs."""
    _classes(s)
    h = mincq.vote_scores(model, s)
    hp, hn = h[s.labels == 1], h[s.labels == -1]
    return float(np.maximum(hn[None, :] - hp[:, None], 0.0).mean())
