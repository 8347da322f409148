"""Convex QP solver based on operator splitting (ADMM).

The problem

    minimize    0.5 z'Pz + c'z
    subject to  A_eq z = b,  G z <= h,  lower <= z <= upper

is rewritten as ``l <= K z <= u`` with ``K = [A_eq; G; I_box]`` and solved
with the over-relaxed splitting iteration popularised by OSQP, after a
Ruiz equilibration of the KKT matrix and a scaling of the cost. The
linear system ``P + sigma I + K' diag(rho) K`` is factorised once per step
size; ``sigma`` keeps it positive definite when ``P`` is singular, which is
the common case for Gram matrices of correlated voters. A converged iterate
is refined by solving the equality-constrained KKT system on the detected
active set ("polishing").
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import lsq_linear

from .exceptions import InvalidProblemError
from .types import QpProblem, QpSolution, SolverConfig

_DENSE_LIMIT = 1500
_RHO_EQ_SCALE = 1e3
_RHO_MIN, _RHO_MAX = 1e-6, 1e6
_ADAPT_EVERY = 100
_RHO_STEP = 10.0  # largest change of rho per adaptation
_POLISH_EVERY = 1000
_RUIZ_ITERS = 10
_SCALE_MIN, _SCALE_MAX = 1e-4, 1e4
_EPS_PINF = 1e-5


def _as_csc(M, shape):
    if sp.issparse(M):
        return sp.csc_matrix(M)
    M = np.asarray(M, float)
    return sp.csc_matrix(M.reshape(shape))


def _check_symmetric(P):
    diff = abs(P - P.T)
    scale = max(abs(P).max(), 1.0) if P.nnz else 1.0
    if diff.nnz and diff.max() > 1e-10 * scale:
        raise InvalidProblemError("quadratic term must be symmetric")


class _LinSys:
    """Factorisation of ``P + sigma I + K' diag(rho) K``."""

    def __init__(self, P, K, sigma, rho):
        n = P.shape[0]
        M = P + sigma * sp.eye(n, format="csc") + K.T @ sp.diags(rho) @ K
        if n <= _DENSE_LIMIT:
            self._chol = sla.cho_factor(M.toarray(), lower=True, check_finite=False)
            self._lu = None
        else:
            self._chol = None
            self._lu = spla.splu(sp.csc_matrix(M), permc_spec="COLAMD")

    def solve(self, rhs):
        if self._chol is not None:
            return sla.cho_solve(self._chol, rhs, check_finite=False)
        return self._lu.solve(rhs)


@dataclass
class _Stacked:
    P: sp.csc_matrix
    c: np.ndarray
    K: sp.csc_matrix
    l: np.ndarray
    u: np.ndarray
    n_eq: int
    n_ineq: int
    box_idx: np.ndarray  # variable index of each box row


def _stack(p: QpProblem) -> _Stacked:
    nv = p.n_vars
    P = _as_csc(p.quadratic, (nv, nv))
    _check_symmetric(P)
    A = _as_csc(p.eq_matrix, (-1, nv))
    G = _as_csc(p.ineq_matrix, (-1, nv))
    box_idx = np.flatnonzero(np.isfinite(p.lower) | np.isfinite(p.upper))
    E = sp.csc_matrix(
        (np.ones(len(box_idx)), (np.arange(len(box_idx)), box_idx)), shape=(len(box_idx), nv)
    )
    K = sp.vstack([A, G, E], format="csc")
    l = np.concatenate([p.eq_rhs, np.full(G.shape[0], -np.inf), p.lower[box_idx]])
    u = np.concatenate([p.eq_rhs, p.ineq_rhs, p.upper[box_idx]])
    return _Stacked(P, np.asarray(p.linear, float), K, l, u, A.shape[0], G.shape[0], box_idx)


@dataclass
class _Scaling:
    d: np.ndarray  # variables: x = d * x_scaled
    e: np.ndarray  # constraint rows: K_scaled = diag(e) K diag(d)
    cost: float    # objective multiplier


def _col_norms(M):
    """Max-abs of each column of a sparse matrix."""
    M = sp.csc_matrix(abs(M))
    if M.shape[0] == 0:
        return np.zeros(M.shape[1])
    return M.max(axis=0).toarray().ravel()


def _clip_norms(v):
    v = np.where(v < _SCALE_MIN, 1.0, v)  # empty or tiny columns stay unscaled
    return np.minimum(v, _SCALE_MAX)


def _equilibrate(st: _Stacked) -> tuple:
    """Ruiz scaling of ``[[P, K'], [K, 0]]``, then cost normalisation."""
    n, m = st.P.shape[0], st.K.shape[0]
    P, K, c = st.P.copy(), st.K.copy(), st.c.copy()
    d, e = np.ones(n), np.ones(m)
    for _ in range(_RUIZ_ITERS):
        dd = 1.0 / np.sqrt(_clip_norms(np.maximum(_col_norms(P), _col_norms(K))))
        de = 1.0 / np.sqrt(_clip_norms(_col_norms(K.T))) if m else np.ones(0)
        Dd, De = sp.diags(dd), sp.diags(de)
        P = sp.csc_matrix(Dd @ P @ Dd)
        K = sp.csc_matrix(De @ K @ Dd)
        c = dd * c
        d, e = d * dd, e * de
    p_norm = float(np.mean(_col_norms(P))) if n else 0.0
    cost = 1.0 / float(_clip_norms(np.array([max(p_norm, _inf_norm(c))]))[0])
    scaled = _Stacked(sp.csc_matrix(cost * P), cost * c, K, e * st.l, e * st.u,
                      st.n_eq, st.n_ineq, st.box_idx)
    return scaled, _Scaling(d, e, cost)


def _inf_norm(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


def _residuals(st: _Stacked, x, z, y):
    Kx = st.K @ x
    Px = st.P @ x
    Kty = st.K.T @ y
    r_prim = _inf_norm(Kx - z)
    r_dual = _inf_norm(Px + st.c + Kty)
    scale_prim = max(_inf_norm(Kx), _inf_norm(z))
    scale_dual = max(_inf_norm(Px), _inf_norm(Kty), _inf_norm(st.c))
    return r_prim, r_dual, scale_prim, scale_dual


def _primal_infeasible(st: _Stacked, dy, eps):
    norm = _inf_norm(dy)
    if norm <= 1e-12:
        return False
    dy_pos, dy_neg = np.maximum(dy, 0.0), np.minimum(dy, 0.0)
    # components pushing against an infinite bound rule out a certificate
    if np.any(dy_pos[~np.isfinite(st.u)] > eps * norm) or np.any(
            dy_neg[~np.isfinite(st.l)] < -eps * norm):
        return False
    u = np.where(np.isfinite(st.u), st.u, 0.0)
    l = np.where(np.isfinite(st.l), st.l, 0.0)
    support = u @ dy_pos + l @ dy_neg
    return _inf_norm(st.K.T @ dy) <= eps * norm and support < -eps * norm


def _equalities_inconsistent(p: QpProblem) -> bool:
    if p.eq_rhs.size == 0:
        return False
    A = p.eq_matrix.toarray() if sp.issparse(p.eq_matrix) else np.asarray(p.eq_matrix)
    z, *_ = np.linalg.lstsq(A, p.eq_rhs, rcond=None)
    scale = max(1.0, _inf_norm(p.eq_rhs))
    return _inf_norm(A @ z - p.eq_rhs) > 1e-9 * scale


def _polish(st: _Stacked, x, z, y, delta=1e-9, refine=5):
    """Solve the KKT system restricted to the active set guessed from (z, y)."""
    lower_act = np.isfinite(st.l) & (z - st.l < -y)
    upper_act = np.isfinite(st.u) & (st.u - z < y)
    eq = np.zeros_like(lower_act)
    eq[: st.n_eq] = True
    active = lower_act | upper_act | eq
    idx = np.flatnonzero(active)
    target = np.where(upper_act, st.u, st.l)[idx]
    target[: st.n_eq] = st.u[: st.n_eq]

    n = st.P.shape[0]
    Ka = st.K[idx]
    k = len(idx)
    KKT = sp.bmat([[st.P, Ka.T], [Ka, None]], format="csc")
    reg = sp.diags(np.concatenate([np.full(n, delta), np.full(k, -delta)]))
    rhs = np.concatenate([-st.c, target])
    if n + k <= 2 * _DENSE_LIMIT:
        lu = sla.lu_factor((KKT + reg).toarray(), check_finite=False)
        solve = lambda r: sla.lu_solve(lu, r, check_finite=False)  # noqa: E731
    else:
        solve = spla.splu(sp.csc_matrix(KKT + reg)).solve
    sol = solve(rhs)
    for _ in range(refine):
        sol = sol + solve(rhs - KKT @ sol)
    if not np.all(np.isfinite(sol)):
        return None
    x_pol = sol[:n]
    y_pol = np.zeros_like(y)
    y_pol[idx] = sol[n:]
    # multipliers of one-sided active constraints must keep their sign
    sign_tol = 1e-9 * max(1.0, _inf_norm(y_pol))
    if np.any(y_pol[lower_act & ~eq] > sign_tol) or np.any(y_pol[upper_act & ~eq] < -sign_tol):
        return None
    z_pol = np.clip(st.K @ x_pol, st.l, st.u)
    return x_pol, z_pol, y_pol


def _report_residuals(p: QpProblem, st: _Stacked, x, y):
    """Residuals of the original problem at the box-projected point ``x``."""
    Kx = st.K @ x
    viol = np.maximum(st.l - Kx, 0.0) + np.maximum(Kx - st.u, 0.0)
    r_prim = _inf_norm(viol)
    r_dual = _inf_norm(st.P @ x + st.c + st.K.T @ y)
    return r_prim, r_dual


def solve(p: QpProblem, cfg: SolverConfig = None) -> QpSolution:
    """Solve a convex QP.

    Returns a :class:`QpSolution` whose ``status`` is ``"solved"`` only when
    both the primal and the dual residual of the returned point are below
    ``cfg.eps_abs``. The objective value is recomputed from ``z_star``.

    Raises
    ------
    InvalidProblemError
        If the quadratic term is not symmetric.
    """
    cfg = cfg or SolverConfig()
    st = _stack(p)
    nv, nc = p.n_vars, st.K.shape[0]

    def finish(x, y, iters, status, polished=False):
        x = np.clip(x, p.lower, p.upper)
        r_prim, r_dual = _report_residuals(p, st, x, y)
        if status == "solved" and max(r_prim, r_dual) > cfg.eps_abs:
            status = "max_iter"
        x.setflags(write=False)
        return QpSolution(
            z_star=x,
            objective_value=p.objective(x),
            primal_residual=r_prim,
            dual_residual=r_dual,
            iterations=iters,
            status=status,
            eq_dual=y[: st.n_eq].copy(),
            ineq_dual=y[st.n_eq: st.n_eq + st.n_ineq].copy(),
            bound_dual=_bound_dual(st, y, nv),
            polished=polished,
        )

    if _equalities_inconsistent(p):
        return finish(np.zeros(nv), np.zeros(nc), 0, "infeasible")

    sc, scale = _equilibrate(st)
    d, e, cost = scale.d, scale.e, scale.cost

    def unscale(xs, zs, ys):
        return d * xs, zs / e, e * ys / cost

    eq_rows = st.l == st.u
    rho_base = cfg.rho
    rho = np.where(eq_rows, _RHO_EQ_SCALE * rho_base, rho_base)
    lin = _LinSys(sc.P, sc.K, cfg.sigma, rho)

    x = np.zeros(nv)
    z = np.clip(np.zeros(nc), sc.l, sc.u)
    y = np.zeros(nc)
    y_prev_check = y.copy()
    alpha, sigma = cfg.alpha, cfg.sigma
    prim_history = []
    last_polish = -np.inf
    adapt_every, last_direction, next_adapt = _ADAPT_EVERY, 0, _ADAPT_EVERY

    for it in range(1, cfg.max_iter + 1):
        rhs = sigma * x - sc.c + sc.K.T @ (rho * z - y)
        x_tilde = lin.solve(rhs)
        z_tilde = sc.K @ x_tilde
        x = alpha * x_tilde + (1.0 - alpha) * x
        z_relaxed = alpha * z_tilde + (1.0 - alpha) * z
        z_new = np.clip(z_relaxed + y / rho, sc.l, sc.u)
        y = y + rho * (z_relaxed - z_new)
        z = z_new

        if it % cfg.check_every:
            continue
        xu, zu, yu = unscale(x, z, y)
        r_prim, r_dual, s_prim, s_dual = _residuals(st, xu, zu, yu)
        prim_history.append((it, r_prim))
        if (r_prim <= cfg.eps_abs + cfg.eps_rel * s_prim
                and r_dual <= cfg.eps_abs + cfg.eps_rel * s_dual):
            x_out, y_out, polished = xu, yu, False
            if cfg.polish and it - last_polish >= 200:
                last_polish = it
                res = _polish(st, xu, zu, yu)
                if res is not None:
                    xp, zp, yp = res
                    rp = _report_residuals(p, st, np.clip(xp, p.lower, p.upper), yp)
                    ra = _report_residuals(p, st, np.clip(xu, p.lower, p.upper), yu)
                    if max(rp) <= max(ra):
                        x_out, y_out, polished = xp, yp, True
            sol = finish(x_out.copy(), y_out.copy(), it, "solved", polished)
            if sol.status == "solved":
                return sol
        elif cfg.polish and it % _POLISH_EVERY == 0:
            # ADMM can crawl on badly conditioned problems; the active set is
            # often already right, so try to finish from it
            res = _polish(st, xu, zu, yu)
            if res is not None:
                sol = finish(res[0].copy(), res[2].copy(), it, "solved", True)
                if sol.status == "solved":
                    return sol
        if _primal_infeasible(st, e * (y - y_prev_check) / cost, _EPS_PINF):
            return finish(xu.copy(), yu.copy(), it, "infeasible")
        y_prev_check = y.copy()

        if it >= next_adapt:
            next_adapt = it + adapt_every
            ratio = np.sqrt((r_prim / (s_prim + 1e-30)) / (r_dual / (s_dual + 1e-30) + 1e-30))
            ratio = min(max(ratio, 1.0 / _RHO_STEP), _RHO_STEP)
            new_base = float(np.clip(rho_base * ratio, _RHO_MIN, _RHO_MAX))
            if new_base > 5 * rho_base or new_base < rho_base / 5:
                direction = 1 if new_base > rho_base else -1
                if direction == -last_direction:
                    adapt_every *= 2  # back-and-forth: wait longer before the next change
                    next_adapt = it + adapt_every
                last_direction = direction
                rho_base = new_base
                rho = np.where(eq_rows, _RHO_EQ_SCALE * rho_base, rho_base)
                lin = _LinSys(sc.P, sc.K, sigma, rho)

    status = "max_iter"
    if prim_history:
        cut = prim_history[-1][0] - cfg.max_iter // 4
        earlier = [r for i, r in prim_history if i <= cut]
        ref = earlier[-1] if earlier else prim_history[0][1]
        if prim_history[-1][1] > ref / 10.0 and prim_history[-1][1] > cfg.eps_abs:
            status = "infeasible"
    xu, _, yu = unscale(x, z, y)
    return finish(xu.copy(), yu.copy(), cfg.max_iter, status)


def _bound_dual(st: _Stacked, y, nv):
    out = np.zeros(nv)
    out[st.box_idx] = y[st.n_eq + st.n_ineq:]
    return out


@dataclass(frozen=True)
class KktReport:
    stationarity: float
    primal_feasibility: float
    complementarity: float
    dual_feasibility: float = 0.0

    def max(self) -> float:
        return max(self.stationarity, self.primal_feasibility,
                   self.complementarity, self.dual_feasibility)


def verify_kkt(p: QpProblem, z, tol: float = 1e-8, duals=None) -> KktReport:
    """Max-norm KKT residuals of ``z`` for problem ``p``.

    With ``duals=(eq_dual, ineq_dual, bound_dual)`` (as returned in a
    :class:`QpSolution`) the residuals are evaluated for those multipliers.
    Without them the best multipliers are estimated by bounded least squares,
    allowing nonzero multipliers only on constraints active within ``tol``.
    """
    z = np.asarray(z, dtype=float)
    nv = p.n_vars
    P = _as_csc(p.quadratic, (nv, nv))
    A = _as_csc(p.eq_matrix, (-1, nv))
    G = _as_csc(p.ineq_matrix, (-1, nv))
    grad = P @ z + p.linear

    eq_res = A @ z - p.eq_rhs
    ineq_slack = p.ineq_rhs - G @ z
    lo_gap = np.where(np.isfinite(p.lower), z - p.lower, np.inf)
    hi_gap = np.where(np.isfinite(p.upper), p.upper - z, np.inf)
    primal = max(
        _inf_norm(eq_res),
        _inf_norm(np.maximum(-ineq_slack, 0.0)),
        _inf_norm(np.maximum(-lo_gap[np.isfinite(lo_gap)], 0.0)),
        _inf_norm(np.maximum(-hi_gap[np.isfinite(hi_gap)], 0.0)),
    )

    if duals is not None:
        lam, nu, bd = (np.asarray(d, float) for d in duals)
        stat = _inf_norm(grad + A.T @ lam + G.T @ nu + bd)
        lo_mult = np.maximum(-bd, 0.0)
        hi_mult = np.maximum(bd, 0.0)
        comp = max(
            _inf_norm(nu * np.where(np.isfinite(ineq_slack), ineq_slack, 0.0)),
            _inf_norm(lo_mult[lo_mult > 0] * lo_gap[lo_mult > 0]),
            _inf_norm(hi_mult[hi_mult > 0] * hi_gap[hi_mult > 0]),
        )
        dual_feas = _inf_norm(np.maximum(-nu, 0.0))
        return KktReport(stat, primal, comp, dual_feas)

    act_ineq = np.flatnonzero(ineq_slack <= tol)
    act_lo = np.flatnonzero(lo_gap <= tol)
    act_hi = np.flatnonzero(hi_gap <= tol)
    eye = sp.eye(nv, format="csc")
    cols = sp.hstack([A.T, G[act_ineq].T, -eye[:, act_lo], eye[:, act_hi]], format="csc")
    n_free = A.shape[0]
    k = cols.shape[1]
    if k == 0:
        mult = np.zeros(0)
        stat = _inf_norm(grad)
    else:
        lb = np.concatenate([np.full(n_free, -np.inf), np.zeros(k - n_free)])
        ub = np.full(k, np.inf)
        if nv * k <= 4_000_000:
            fit = lsq_linear(cols.toarray(), -grad, bounds=(lb, ub), method="bvls",
                             tol=1e-14, lsmr_tol=None)
        else:
            fit = lsq_linear(cols, -grad, bounds=(lb, ub), method="trf", tol=1e-12,
                             lsmr_tol="auto")
        mult = fit.x
        stat = _inf_norm(cols @ mult + grad)
    slack = np.concatenate([
        np.zeros(n_free), ineq_slack[act_ineq], lo_gap[act_lo], hi_gap[act_hi]])
    comp = _inf_norm(mult * slack)
    return KktReport(stat, primal, comp, 0.0)
