"""MinCq: majority vote minimising the empirical C-bound.

The program works on box variables ``q'_i in [0, 1/n]``; the vote uses the
signed weights ``q_i = 2 q'_i - 1/n``. With the Gram matrix ``M`` of the
voters, ``A = M 1 / n`` and the voter margins ``m_i = mean_j(y_j h_i(x_j))``:

    minimize    q'M q' - A'q'
    subject to  m'q' = mu/2 + sum(m)/(2n),   0 <= q' <= 1/n

which fixes the first moment of the Q-margin of the final vote to ``mu`` and
minimises its second moment.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qp
from .exceptions import (
    ConvergenceError,
    InfeasibleMarginError,
    InvalidHyperparameterError,
    ShapeError,
)
from .types import FusionModel, QpProblem, ScoreMatrix, SolverConfig, VoterWeights

# Slack on the interval test for the margin equality.
_FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class MincqAssembly:
    m_matrix: np.ndarray
    a_vector: np.ndarray
    margin_vector: np.ndarray
    margin_rhs: float
    mu: float

    @property
    def n(self) -> int:
        return len(self.a_vector)

    def max_margin(self) -> float:
        """Largest first moment any vote in the box can reach on the sample."""
        return float(np.abs(self.margin_vector).sum() / self.n)

    def objective(self, q_prime) -> float:
        q_prime = np.asarray(q_prime, dtype=float)
        return float(q_prime @ self.m_matrix @ q_prime - self.a_vector @ q_prime)


def assemble(s: ScoreMatrix, mu: float) -> MincqAssembly:
    if not mu > 0:
        raise InvalidHyperparameterError(f"mu must be positive, got {mu}")
    H = s.scores
    m, n = H.shape
    y = s.labels.astype(float)
    M = (H.T @ H) / m
    margins = (y @ H) / m
    return MincqAssembly(
        m_matrix=M,
        a_vector=M.sum(axis=1) / n,
        margin_vector=margins,
        margin_rhs=mu / 2.0 + margins.sum() / (2.0 * n),
        mu=float(mu),
    )


def check_margin_feasible(asm: MincqAssembly) -> None:
    """Raise :class:`InfeasibleMarginError` if the margin equality misses the box."""
    n = asm.n
    hi = np.maximum(asm.margin_vector, 0.0).sum() / n
    lo = np.minimum(asm.margin_vector, 0.0).sum() / n
    tol = _FEASIBILITY_TOL * max(1.0, abs(asm.margin_rhs))
    if asm.margin_rhs > hi + tol or asm.margin_rhs < lo - tol:
        raise InfeasibleMarginError(asm.mu, asm.max_margin())


def to_qp(asm: MincqAssembly) -> QpProblem:
    n = asm.n
    return QpProblem(
        quadratic=2.0 * asm.m_matrix,
        linear=-asm.a_vector,
        eq_matrix=asm.margin_vector.reshape(1, n),
        eq_rhs=[asm.margin_rhs],
        lower=np.zeros(n),
        upper=np.full(n, 1.0 / n),
    )


def solve_checked(problem: QpProblem, cfg: SolverConfig, asm: MincqAssembly):
    sol = qp.solve(problem, cfg)
    if sol.status == "infeasible":
        raise InfeasibleMarginError(asm.mu, asm.max_margin())
    if sol.status != "solved":
        raise ConvergenceError(
            f"QP not solved after {sol.iterations} iterations "
            f"(primal {sol.primal_residual:.2e}, dual {sol.dual_residual:.2e})"
        )
    return sol


def weights_from_solution(z, n: int) -> VoterWeights:
    q_prime = np.clip(np.asarray(z[:n], dtype=float), 0.0, 1.0 / n)
    return VoterWeights.from_q_prime(q_prime)


def train(s: ScoreMatrix, mu: float, cfg: SolverConfig = None) -> FusionModel:
    """Learn a MinCq vote over the columns of ``s`` with first moment ``mu``.

    Raises
    ------
    InfeasibleMarginError
        When no weighting in the box reaches margin ``mu``; the error carries
        the largest feasible margin.
    """
    cfg = cfg or SolverConfig()
    asm = assemble(s, mu)
    check_margin_feasible(asm)
    sol = solve_checked(to_qp(asm), cfg, asm)
    return FusionModel(
        algorithm="mincq",
        weights=weights_from_solution(sol.z_star, s.n),
        voter_names=s.voter_names,
        hyperparams={"mu": float(mu)},
    )


class Prediction(NamedTuple):
    scores: np.ndarray
    labels: np.ndarray


def _check_columns(model: FusionModel, s: ScoreMatrix):
    expected = model.input_voter_names
    if s.n != len(expected):
        raise ShapeError(f"model expects {len(expected)} voters, data has {s.n}")
    if s.voter_names != expected:
        raise ShapeError(f"voter names {s.voter_names} do not match model voters {expected}")


def vote_scores(model: FusionModel, s: ScoreMatrix) -> np.ndarray:
    """Real-valued vote ``H(x)`` of any fusion model on every row of ``s``."""
    _check_columns(model, s)
    if model.kernel is not None:
        s = model.kernel.transform(s)
    if model.algorithm == "best_confidence":
        from .baselines import best_confidence_vote

        return best_confidence_vote(s)
    return s.scores @ model.signed_weights


def predict(model: FusionModel, s: ScoreMatrix) -> Prediction:
    """Vote scores and labels; a score of exactly zero is labelled +1."""
    h = vote_scores(model, s)
    return Prediction(h, np.where(h >= 0, 1, -1))
