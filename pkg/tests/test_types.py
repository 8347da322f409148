import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fusionq.exceptions import DataError, InvalidWeightsError, ShapeError
from fusionq.types import (
    FusionModel,
    QpProblem,
    ScoreMatrix,
    VoterWeights,
    derive_signed_weights,
    split_by_label,
)


def _sm(labels):
    return ScoreMatrix(np.zeros((len(labels), 1)), labels)


class TestSplitByLabel:
    def test_mixed(self):
        sp = split_by_label(_sm([1, -1, 1]))
        assert sp.positive_rows.tolist() == [0, 2]
        assert sp.negative_rows.tolist() == [1]

    def test_only_negatives(self):
        sp = split_by_label(_sm([-1, -1]))
        assert sp.positive_rows.tolist() == []
        assert sp.negative_rows.tolist() == [0, 1]

    def test_only_positive(self):
        sp = split_by_label(_sm([1]))
        assert sp.positive_rows.tolist() == [0]
        assert sp.negative_rows.tolist() == []

    @given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=40))
    def test_partition(self, labels):
        sp = split_by_label(_sm(labels))
        rows = sorted(sp.positive_rows.tolist() + sp.negative_rows.tolist())
        assert rows == list(range(len(labels)))
        assert sp.m_pos + sp.m_neg == len(labels)


class TestSignedWeights:
    def test_midpoint(self):
        np.testing.assert_array_equal(derive_signed_weights([0.5], 1), [0.0])

    def test_box_endpoints(self):
        np.testing.assert_array_equal(derive_signed_weights([0.5, 0.0], 2), [0.5, -0.5])

    def test_upper_edge_allowed(self):
        q = derive_signed_weights([1 / 3] * 3, 3)
        np.testing.assert_allclose(q, [1 / 3] * 3, rtol=0, atol=1e-15)

    @pytest.mark.parametrize("qp", [[-0.1, 0.2], [0.6, 0.0]])
    def test_out_of_box(self, qp):
        with pytest.raises(InvalidWeightsError):
            derive_signed_weights(qp, 2)

    @given(st.integers(1, 12).flatmap(
        lambda n: arrays(float, n, elements=st.floats(0, 1)).map(lambda u: u / n)))
    def test_round_trip(self, q_prime):
        n = len(q_prime)
        q = derive_signed_weights(q_prime, n)
        np.testing.assert_allclose((q + 1.0 / n) / 2.0, q_prime, rtol=0, atol=1e-15)
        assert np.all(q >= -1.0 / n) and np.all(q <= 1.0 / n)


class TestScoreMatrix:
    def test_rejects_bad_label(self):
        with pytest.raises(DataError):
            ScoreMatrix([[1.0], [2.0]], [1, 0])

    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            ScoreMatrix([[np.nan]], [1])

    def test_rejects_duplicate_names(self):
        with pytest.raises(DataError):
            ScoreMatrix([[1.0, 2.0]], [1], voter_names=["a", "a"])
        with pytest.raises(DataError):
            ScoreMatrix([[1.0], [2.0]], [1, 1], example_ids=["x", "x"])

    def test_immutable(self):
        s = ScoreMatrix([[1.0, 2.0]], [1])
        with pytest.raises(ValueError):
            s.scores[0, 0] = 5.0

    def test_take(self):
        s = ScoreMatrix([[1.0], [2.0], [3.0]], [1, -1, 1], example_ids=["a", "b", "c"])
        sub = s.take([2, 0])
        assert sub.example_ids == ("c", "a")
        assert sub.scores[:, 0].tolist() == [3.0, 1.0]


def test_voter_weights_consistency():
    w = VoterWeights.from_q_prime([0.25, 0.0])
    np.testing.assert_array_equal(w.q, [0.0, -0.5])
    with pytest.raises(InvalidWeightsError):
        VoterWeights([0.25, 0.0], [0.1, 0.1])


def test_fusion_model_length_check():
    with pytest.raises(ShapeError):
        FusionModel("sum", np.ones(2), ("a",))


def test_qp_problem_bounds():
    with pytest.raises(DataError):
        QpProblem(np.eye(1), [0.0], lower=[1.0], upper=[0.0])
