"""Independent reference computations used by the tests.

Nothing here imports the code under test beyond plain data containers.
"""
import math

import mpmath
import numpy as np


def grid_axis(lo, hi, step=1e-3):
    """Points from lo to hi inclusive, spacing at most ``step``."""
    count = int(np.ceil((hi - lo) / step - 1e-9)) + 1
    return np.linspace(lo, hi, max(count, 2))


def grid_qp_min(P, c, a, b, lo, hi, step=1e-3, chunk=2_000_000):
    """Brute-force ``min 0.5 z'Pz + c'z`` s.t. ``a'z = b``, ``lo <= z <= hi``.

    Every variable with a nonzero equality coefficient takes a turn as the
    eliminated one; the others run over a grid of spacing ``step``.
    Returns ``(best value, best point)``.
    """
    P, c, a = (np.asarray(v, float) for v in (P, c, a))
    n = len(c)
    best_val, best_z = np.inf, None
    for k in range(n):
        if abs(a[k]) < 1e-12:
            continue
        others = [i for i in range(n) if i != k]
        axes = [grid_axis(lo[i], hi[i], step) for i in others]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n - 1) \
            if others else np.zeros((1, 0))
        for start in range(0, len(grid), chunk):
            G = grid[start:start + chunk]
            zk = (b - G @ a[others]) / a[k]
            ok = (zk >= lo[k] - 1e-12) & (zk <= hi[k] + 1e-12)
            if not ok.any():
                continue
            Z = np.empty((ok.sum(), n))
            Z[:, others] = G[ok]
            Z[:, k] = np.clip(zk[ok], lo[k], hi[k])
            vals = 0.5 * np.einsum("ij,jk,ik->i", Z, P, Z) + Z @ c
            j = int(np.argmin(vals))
            if vals[j] < best_val:
                best_val, best_z = float(vals[j]), Z[j].copy()
    return best_val, best_z


def mincq_matrices(H, y):
    """Gram matrix, A vector, voter margins and margin target, from loops."""
    m, n = H.shape
    M = np.zeros((n, n))
    for i in range(n):
        for k in range(n):
            M[i, k] = sum(H[j, i] * H[j, k] for j in range(m)) / m
    A = np.array([sum(M[i, k] for k in range(n)) / n for i in range(n)])
    marg = np.array([sum(y[j] * H[j, i] for j in range(m)) / m for i in range(n)])
    return M, A, marg


def brute_force_map(scores, labels):
    """MAP by counting, for each positive, who ranks at or above it.

    Example k ranks above j when its score is larger, or equal with k < j.
    """
    scores = list(map(float, scores))
    labels = list(labels)
    m = len(scores)
    precisions = []
    for j in range(m):
        if labels[j] != 1:
            continue
        above = [k for k in range(m)
                 if scores[k] > scores[j] or (scores[k] == scores[j] and k <= j)]
        precisions.append(sum(1 for k in above if labels[k] == 1) / len(above))
    return math.fsum(precisions) / len(precisions)


def t_test_oracle(a, b):
    """Paired t statistic and two-sided p-value by integrating the t density."""
    mpmath.mp.dps = 30
    d = [mpmath.mpf(x) - mpmath.mpf(z) for x, z in zip(a, b)]
    n = len(d)
    mean = sum(d) / n
    var = sum((x - mean) ** 2 for x in d) / (n - 1)
    t = mean / mpmath.sqrt(var / n)
    nu = n - 1
    const = mpmath.gamma((nu + 1) / mpmath.mpf(2)) / (
        mpmath.sqrt(nu * mpmath.pi) * mpmath.gamma(nu / mpmath.mpf(2)))
    dens = lambda x: const * (1 + x * x / nu) ** (-(nu + 1) / mpmath.mpf(2))  # noqa: E731
    tail = mpmath.quad(dens, [abs(t), mpmath.inf])
    return float(t), float(2 * tail)


def hinge_pw_total(h_pos, h_neg):
    mp, mn = len(h_pos), len(h_neg)
    return sum(max(hn - hp, 0.0) for hp in h_pos for hn in h_neg) / (mp * mn)


def hinge_pwav_total(h_pos, h_neg):
    mp, mn = len(h_pos), len(h_neg)
    return sum(max(sum(hn - hp for hn in h_neg) / (mp * mn), 0.0) for hp in h_pos)


def fold_loop_oracle(labels, folds, seed):
    """Stratified fold assignment written out step by step."""
    rng = np.random.default_rng(seed)
    pos = [j for j, v in enumerate(labels) if v == 1]
    neg = [j for j, v in enumerate(labels) if v == -1]
    order = list(rng.permutation(pos)) + list(rng.permutation(neg))
    assignment = {}
    for position, row in enumerate(order):
        assignment[int(row)] = position % folds
    return [sorted(r for r, f in assignment.items() if f == k) for k in range(folds)]
