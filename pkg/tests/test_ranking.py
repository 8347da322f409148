import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fusionq import mincq, qp, ranking
from fusionq.exceptions import MissingClassError, ProblemTooLargeError
from fusionq.metrics import mean_average_precision
from fusionq.types import FusionModel, ScoreMatrix, SolverConfig, VoterWeights

from oracles import grid_axis, hinge_pw_total, hinge_pwav_total, mincq_matrices


def _fixed(h_pos, h_neg):
    """Single-voter model with weight 1 on a sample whose scores are the votes."""
    scores = np.array(list(h_pos) + list(h_neg), float)[:, None]
    labels = [1] * len(h_pos) + [-1] * len(h_neg)
    return FusionModel("mincq", VoterWeights([1.0], [1.0]), ("h0",)), ScoreMatrix(scores, labels)


class TestPairwiseLoss:
    def test_ordered(self):
        assert ranking.pairwise_loss(*_fixed([0.5], [-0.5])) == 0.0

    def test_single_violation(self):
        assert ranking.pairwise_loss(*_fixed([0.2], [0.4])) == pytest.approx(0.2)

    def test_two_pairs(self):
        assert ranking.pairwise_loss(*_fixed([1.0, -1.0], [0.0])) == pytest.approx(0.5)

    def test_missing_class(self):
        model, _ = _fixed([1.0], [0.0])
        with pytest.raises(MissingClassError):
            ranking.pairwise_loss(model, ScoreMatrix([[1.0], [2.0]], [1, 1]))


TOY = ScoreMatrix(
    [[0.9, 0.1], [0.2, 0.8], [-0.6, 0.3], [0.1, -0.7]],
    [1, 1, -1, -1],
)


def pw_grid_oracle(s, mu, beta, averaged, step=1e-4):
    """Grid over the margin slice; slacks set to their analytic hinge values."""
    M, A, marg = mincq_matrices(s.scores, s.labels)
    n = s.n
    rhs = mu / 2 + marg.sum() / (2 * n)
    best = (np.inf, None)
    for q1 in grid_axis(0.0, 1.0 / n, step):
        q2 = (rhs - marg[0] * q1) / marg[1]
        if not -1e-12 <= q2 <= 1.0 / n + 1e-12:
            continue
        qp_ = np.array([q1, np.clip(q2, 0, 1.0 / n)])
        q = 2 * qp_ - 1.0 / n
        h = s.scores @ q
        hp, hn = h[s.labels == 1], h[s.labels == -1]
        slack = hinge_pwav_total(hp, hn) if averaged else hinge_pw_total(hp, hn)
        val = qp_ @ M @ qp_ - A @ qp_ + beta * slack
        if val < best[0]:
            best = (val, qp_)
    return best


def ranking_objective(s, model, beta, averaged):
    asm = mincq.assemble(s, model.hyperparams["mu"])
    q = model.weights.q
    slack = ranking.pwav_slacks(q, s) if averaged else ranking.pw_slacks(q, s)
    return asm.objective(model.weights.q_prime) + beta * slack.sum()


class TestTrainPw:
    def test_separable_has_zero_slacks(self):
        rng = np.random.default_rng(0)
        y = np.array([1] * 6 + [-1] * 10)
        perfect = np.where(y == 1, 1.0, -1.0) + rng.uniform(-0.2, 0.2, size=16)
        s = ScoreMatrix(np.column_stack([perfect, rng.normal(size=16)]), y)
        asm = ranking.assemble(s, 0.1, 1.0, averaged=False)
        sol = qp.solve(ranking.to_qp(asm))
        assert sol.status == "solved"
        assert np.max(sol.z_star[2:]) <= 1e-9
        model = ranking.train_pw(s, 0.1, 1.0)
        assert ranking.pairwise_loss(model, s) == 0.0

    @pytest.mark.parametrize("averaged", [False, True])
    @pytest.mark.parametrize("beta", [0.5, 5.0, 50.0])
    def test_grid_oracle(self, averaged, beta):
        mu = 0.05
        train = ranking.train_pwav if averaged else ranking.train_pw
        model = train(TOY, mu, beta)
        ref_val, ref_q = pw_grid_oracle(TOY, mu, beta, averaged)
        got = ranking_objective(TOY, model, beta, averaged)
        assert abs(got - ref_val) <= 1e-3
        assert got <= ref_val + 1e-9
        np.testing.assert_allclose(model.weights.q_prime, ref_q, atol=1e-3)

    @pytest.mark.parametrize("averaged", [False, True])
    def test_slacks_equal_hinge_at_optimum(self, averaged):
        rng = np.random.default_rng(3)
        y = np.where(rng.uniform(size=30) < 0.4, 1, -1)
        s = ScoreMatrix(y[:, None] * 0.5 + rng.normal(size=(30, 3)), y)
        asm = ranking.assemble(s, 0.02, 10.0, averaged)
        sol = qp.solve(ranking.to_qp(asm))
        assert sol.status == "solved"
        q = 2 * sol.z_star[:3] - 1 / 3
        analytic = ranking.pwav_slacks(q, s) if averaged else ranking.pw_slacks(q, s)
        np.testing.assert_allclose(sol.z_star[3:], analytic, atol=1e-6)
        assert np.all(sol.z_star[3:] >= 0)

    @pytest.mark.parametrize("seed", range(3))
    def test_small_beta_recovers_mincq(self, seed):
        rng = np.random.default_rng(seed)
        y = np.where(rng.uniform(size=40) < 0.4, 1, -1)
        s = ScoreMatrix(y[:, None] * rng.uniform(0.3, 1, 3) + rng.normal(size=(40, 3)), y)
        base = mincq.train(s, 0.01).weights.q
        for train in (ranking.train_pw, ranking.train_pwav):
            q = train(s, 0.01, 1e-8).weights.q
            assert np.max(np.abs(q - base)) <= 1e-3

    def test_margin_and_box_hold(self):
        model = ranking.train_pw(TOY, 0.05, 10.0)
        asm = mincq.assemble(TOY, 0.05)
        assert abs(asm.margin_vector @ model.weights.q_prime - asm.margin_rhs) <= 1e-6
        assert np.all(model.weights.q_prime >= 0) and np.all(model.weights.q_prime <= 0.5)

    def test_size_cap(self):
        s = ScoreMatrix(np.arange(20.0)[:, None], [1] * 10 + [-1] * 10)
        with pytest.raises(ProblemTooLargeError, match="mincq_pwav"):
            ranking.train_pw(s, 0.01, 1.0, max_slacks=99)

    def test_missing_class(self):
        s = ScoreMatrix([[1.0], [2.0]], [1, 1])
        with pytest.raises(MissingClassError):
            ranking.train_pwav(s, 0.01, 1.0)

    def test_constraint_rows_encode_pairs(self):
        asm = ranking.assemble(TOY, 0.05, 1.0, averaged=False)
        G, rhs = asm.constraint_rows()
        qp_ = np.array([0.3, 0.2])
        q = 2 * qp_ - 0.5
        h = TOY.scores @ q
        # row for pair (positive 1, negative 0)
        k = 1 * 2 + 0
        expected = (h[2] - h[1]) / 4
        xi_zero = np.concatenate([qp_, np.zeros(asm.slack_count)])
        assert (G @ xi_zero)[k] - rhs[k] == pytest.approx(expected)


class TestSlackOrdering:
    def test_toy_by_hand(self):
        # same weights for both: averaged hinge total never exceeds the pairwise one
        q = np.array([0.1, -0.3])
        pw = ranking.pw_slacks(q, TOY).sum()
        pwav = ranking.pwav_slacks(q, TOY).sum()
        h = TOY.scores @ q
        assert pw == pytest.approx(hinge_pw_total(h[:2], h[2:]))
        assert pwav == pytest.approx(hinge_pwav_total(h[:2], h[2:]))
        assert pwav <= pw

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_jensen(self, seed):
        rng = np.random.default_rng(seed)
        m, n = rng.integers(4, 25), rng.integers(1, 5)
        y = np.where(np.arange(m) < max(1, m // 3), 1, -1)
        s = ScoreMatrix(rng.normal(size=(m, n)), y)
        q = rng.uniform(-1, 1, size=n) / n
        assert ranking.pwav_slacks(q, s).sum() <= ranking.pw_slacks(q, s).sum() + 1e-15
        pw, pwav = ranking.slack_totals(q, s)
        assert pwav <= pw
        assert pw == pytest.approx(ranking.pw_slacks(q, s).sum(), rel=1e-12, abs=1e-15)
        assert pwav == pytest.approx(ranking.pwav_slacks(q, s).sum(), rel=1e-12, abs=1e-15)


def test_zero_loss_gives_perfect_map():
    rng = np.random.default_rng(9)
    y = np.array([1] * 8 + [-1] * 12)
    s = ScoreMatrix(np.column_stack([y + rng.uniform(-0.5, 0.5, 20), rng.normal(size=20)]), y)
    model = ranking.train_pwav(s, 0.05, 100.0)
    assert ranking.pairwise_loss(model, s) == 0.0
    assert mean_average_precision(mincq.vote_scores(model, s), y) == 1.0
