"""Shared domain types.

Every container here is frozen and stores read-only numpy arrays, so a
``ScoreMatrix`` can be handed to several training jobs at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .exceptions import DataError, InvalidProblemError, InvalidWeightsError, ShapeError

ALGORITHMS = (
    "mincq",
    "mincq_pw",
    "mincq_pwav",
    "sum",
    "map_weighted",
    "best_confidence",
    "h_best",
)
MINCQ_FAMILY = ("mincq", "mincq_pw", "mincq_pwav")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScoreMatrix:
    """Real-valued outputs of ``n`` voters on ``m`` labelled examples.

    Parameters
    ----------
    scores : array of shape (m, n)
    labels : array of shape (m,), values in {-1, +1}
    voter_names, example_ids : optional identifiers; defaults are
        ``h0..h{n-1}`` and ``0..m-1``.
    """

    scores: np.ndarray
    labels: np.ndarray
    voter_names: tuple = None
    example_ids: tuple = None

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float)
        if scores.ndim == 1:
            scores = scores.reshape(-1, 1)
        if scores.ndim != 2 or scores.shape[0] < 1 or scores.shape[1] < 1:
            raise ShapeError(f"scores must be a non-empty 2-d table, got shape {scores.shape}")
        if not np.all(np.isfinite(scores)):
            raise DataError("scores must be finite")
        m, n = scores.shape

        raw_labels = np.asarray(self.labels)
        if raw_labels.shape != (m,):
            raise ShapeError(f"expected {m} labels, got shape {raw_labels.shape}")
        if not np.all((raw_labels == 1) | (raw_labels == -1)):
            bad = raw_labels[(raw_labels != 1) & (raw_labels != -1)][0]
            raise DataError(f"labels must be -1 or +1, found {bad!r}")
        labels = raw_labels.astype(np.int64)

        names = tuple(f"h{i}" for i in range(n)) if self.voter_names is None else tuple(
            str(v) for v in self.voter_names)
        ids = tuple(str(j) for j in range(m)) if self.example_ids is None else tuple(
            str(e) for e in self.example_ids)
        if len(names) != n:
            raise ShapeError(f"{len(names)} voter names for {n} score columns")
        if len(ids) != m:
            raise ShapeError(f"{len(ids)} example ids for {m} rows")
        if len(set(names)) != n:
            raise DataError("voter names must be unique")
        if len(set(ids)) != m:
            raise DataError("example ids must be unique")

        object.__setattr__(self, "scores", _frozen(scores))
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        object.__setattr__(self, "voter_names", names)
        object.__setattr__(self, "example_ids", ids)

    @property
    def m(self) -> int:
        return self.scores.shape[0]

    @property
    def n(self) -> int:
        return self.scores.shape[1]

    def take(self, rows) -> "ScoreMatrix":
        """Sub-sample restricted to ``rows`` (kept in the given order)."""
        rows = np.asarray(rows, dtype=np.int64)
        return ScoreMatrix(
            self.scores[rows],
            self.labels[rows],
            self.voter_names,
            tuple(self.example_ids[j] for j in rows),
        )

    def __eq__(self, other):
        if not isinstance(other, ScoreMatrix):
            return NotImplemented
        return (
            self.voter_names == other.voter_names
            and self.example_ids == other.example_ids
            and np.array_equal(self.scores, other.scores)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


@dataclass(frozen=True)
class PositiveNegativeSplit:
    positive_rows: np.ndarray
    negative_rows: np.ndarray

    @property
    def m_pos(self) -> int:
        return len(self.positive_rows)

    @property
    def m_neg(self) -> int:
        return len(self.negative_rows)


def split_by_label(s: ScoreMatrix) -> PositiveNegativeSplit:
    """Row indices of positive and negative examples, in row order."""
    return PositiveNegativeSplit(
        _frozen(np.flatnonzero(s.labels == 1), np.int64),
        _frozen(np.flatnonzero(s.labels == -1), np.int64),
    )


def derive_signed_weights(q_prime, n: int) -> np.ndarray:
    """Map box variables ``q'_i`` in ``[0, 1/n]`` to vote weights ``2 q'_i - 1/n``."""
    q_prime = np.asarray(q_prime, dtype=float)
    if q_prime.shape != (n,):
        raise InvalidWeightsError(f"expected {n} weights, got shape {q_prime.shape}")
    if np.any(q_prime < 0) or np.any(q_prime > 1.0 / n):
        raise InvalidWeightsError(f"weights must lie in [0, 1/{n}]")
    return 2.0 * q_prime - 1.0 / n


@dataclass(frozen=True)
class VoterWeights:
    """Box variables of the MinCq programs together with the signed vote weights."""

    q_prime: np.ndarray
    q: np.ndarray = None

    def __post_init__(self):
        qp = np.asarray(self.q_prime, dtype=float)
        q = derive_signed_weights(qp, len(qp)) if self.q is None else np.asarray(self.q, dtype=float)
        if q.shape != qp.shape:
            raise InvalidWeightsError("q and q_prime differ in length")
        if not np.allclose(q, 2.0 * qp - 1.0 / max(len(qp), 1), rtol=0, atol=1e-12):
            raise InvalidWeightsError("q is not 2 q' - 1/n")
        object.__setattr__(self, "q_prime", _frozen(qp))
        object.__setattr__(self, "q", _frozen(q))

    @classmethod
    def from_q_prime(cls, q_prime) -> "VoterWeights":
        q_prime = np.asarray(q_prime, dtype=float)
        return cls(q_prime, derive_signed_weights(q_prime, len(q_prime)))

    def __len__(self):
        return len(self.q)

    def __eq__(self, other):
        if not isinstance(other, VoterWeights):
            return NotImplemented
        return np.array_equal(self.q_prime, other.q_prime) and np.array_equal(self.q, other.q)

    __hash__ = None


Matrix = Union[np.ndarray, sp.spmatrix, sp.sparray]


@dataclass(frozen=True)
class QpProblem:
    """``minimize 0.5 z'Pz + c'z`` subject to equalities, ``G z <= h`` and box bounds.

    Matrices may be dense arrays or scipy sparse matrices. Missing
    constraint blocks default to empty; missing bounds default to +-inf.
    """

    quadratic: Matrix
    linear: np.ndarray
    eq_matrix: Optional[Matrix] = None
    eq_rhs: Optional[np.ndarray] = None
    ineq_matrix: Optional[Matrix] = None
    ineq_rhs: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        c = _frozen(np.ravel(self.linear))
        nv = c.shape[0]
        P = self.quadratic if sp.issparse(self.quadratic) else np.asarray(self.quadratic, float)
        if P.shape != (nv, nv):
            raise InvalidProblemError(f"quadratic term has shape {P.shape}, expected {(nv, nv)}")

        def block(M, rhs, name):
            if M is None:
                return np.zeros((0, nv)), _frozen(np.zeros(0))
            M = M if sp.issparse(M) else np.atleast_2d(np.asarray(M, float))
            rhs = _frozen(np.ravel(rhs))
            if M.shape[1] != nv or M.shape[0] != rhs.shape[0]:
                raise InvalidProblemError(f"{name} block has inconsistent shape")
            return M, rhs

        A, b = block(self.eq_matrix, self.eq_rhs, "equality")
        G, h = block(self.ineq_matrix, self.ineq_rhs, "inequality")
        lo = _frozen(np.full(nv, -np.inf) if self.lower is None else np.ravel(self.lower))
        hi = _frozen(np.full(nv, np.inf) if self.upper is None else np.ravel(self.upper))
        if lo.shape != (nv,) or hi.shape != (nv,):
            raise InvalidProblemError("bounds must have one entry per variable")
        if np.any(lo > hi):
            raise InvalidProblemError("lower bound exceeds upper bound")
        for name, value in [("quadratic", P), ("linear", c), ("eq_matrix", A), ("eq_rhs", b),
                            ("ineq_matrix", G), ("ineq_rhs", h), ("lower", lo), ("upper", hi)]:
            object.__setattr__(self, name, value)

    @property
    def n_vars(self) -> int:
        return self.linear.shape[0]

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ (self.quadratic @ z) + self.linear @ z)


@dataclass(frozen=True)
class SolverConfig:
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iter: int = 20000
    alpha: float = 1.6
    sigma: float = 1e-8
    rho: float = 0.1
    polish: bool = True
    check_every: int = 10


@dataclass(frozen=True)
class QpSolution:
    z_star: np.ndarray
    objective_value: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str  # "solved" | "max_iter" | "infeasible"
    eq_dual: np.ndarray = field(default=None, repr=False)
    ineq_dual: np.ndarray = field(default=None, repr=False)
    bound_dual: np.ndarray = field(default=None, repr=False)
    polished: bool = False


@dataclass(frozen=True)
class FusionModel:
    """A trained late-fusion rule.

    ``weights`` is a :class:`VoterWeights` for the MinCq family and a plain
    weight vector for the baselines. ``kernel`` holds the RBF layer when the
    voters are kernel voters; ``voter_names`` then lists the kernel voters.
    """

    algorithm: str
    weights: Any
    voter_names: tuple
    hyperparams: Mapping[str, float] = field(default_factory=dict)
    kernel: Any = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise DataError(f"unknown algorithm {self.algorithm!r}")
        w = self.weights if isinstance(self.weights, VoterWeights) else _frozen(self.weights)
        names = tuple(self.voter_names)
        if len(w) != len(names):
            raise ShapeError(f"{len(w)} weights for {len(names)} voters")
        if self.kernel is not None and self.kernel.anchor_count != len(names):
            raise ShapeError("kernel anchor count differs from voter count")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "voter_names", names)
        object.__setattr__(self, "hyperparams", dict(self.hyperparams))

    @property
    def signed_weights(self) -> np.ndarray:
        return self.weights.q if isinstance(self.weights, VoterWeights) else self.weights

    @property
    def input_voter_names(self) -> tuple:
        """Column names the model expects in its input ScoreMatrix."""
        return self.kernel.voter_names if self.kernel is not None else self.voter_names

    def __eq__(self, other):
        if not isinstance(other, FusionModel):
            return NotImplemented
        same_w = (self.weights == other.weights if isinstance(self.weights, VoterWeights)
                  else isinstance(other.weights, np.ndarray)
                  and np.array_equal(self.weights, other.weights))
        return (
            self.algorithm == other.algorithm
            and same_w
            and self.voter_names == other.voter_names
            and self.hyperparams == other.hyperparams
            and self.kernel == other.kernel
        )

    __hash__ = None


@dataclass(frozen=True)
class EvalReport:
    risk: float
    map: float
    first_moment: float
    second_moment: float
    c_bound: Optional[float]
    diversity: np.ndarray

    def summary(self) -> dict:
        div = np.asarray(self.diversity)
        off = div[~np.eye(len(div), dtype=bool)]
        return {
            "risk": self.risk,
            "map": self.map,
            "first_moment": self.first_moment,
            "second_moment": self.second_moment,
            "c_bound": self.c_bound,
            "diversity_mean_offdiag": float(off.mean()) if off.size else None,
            "diversity_min_offdiag": float(off.min()) if off.size else None,
            "diversity_max_offdiag": float(off.max()) if off.size else None,
        }
