"""Core matrix types and the forward model S = YT."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rand_prior, rand_stochastic
from decouple import (
    DimensionMismatch,
    LabeledDataset,
    LengthMismatch,
    NegativeEntry,
    OneHotMatrix,
    ParseError,
    Prior,
    RowStochasticMatrix,
    RowSumViolation,
    forward_selection,
    validate_stochastic,
)


class TestValidateStochastic:
    def test_identity_accepted_unchanged(self):
        m = np.eye(2)
        out = validate_stochastic(m, tol=1e-9)
        assert isinstance(out, RowStochasticMatrix)
        assert np.array_equal(out.data, np.eye(2))

    def test_renormalizes_within_tolerance(self):
        out = validate_stochastic([[0.5, 0.5001], [0.0, 1.0]], tol=1e-3)
        assert out.data[0].sum() == pytest.approx(1.0, abs=1e-15)
        # proportions preserved by pure rescaling
        assert out.data[0, 1] / out.data[0, 0] == pytest.approx(0.5001 / 0.5, rel=1e-12)
        assert np.array_equal(out.data[1], [0.0, 1.0])

    def test_negative_beyond_tol_rejected(self):
        with pytest.raises(NegativeEntry):
            validate_stochastic([[1.2, -0.2], [0.0, 1.0]], tol=1e-9)

    def test_row_sum_violation(self):
        with pytest.raises(RowSumViolation):
            validate_stochastic([[0.4, 0.4], [0.0, 1.0]], tol=1e-9)

    def test_tiny_negative_clamped_to_zero(self):
        out = validate_stochastic([[-1e-12, 0.6, 0.4 + 1e-12]], tol=1e-9)
        assert out.data[0, 0] == 0.0
        assert out.data[0].sum() == pytest.approx(1.0, abs=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(ParseError):
            validate_stochastic([[np.nan, 1.0]], tol=1e-9)
        with pytest.raises(ParseError):
            validate_stochastic([[np.inf, 1.0]], tol=1e-9)

    def test_empty_or_wrong_rank_rejected(self):
        with pytest.raises(DimensionMismatch):
            validate_stochastic(np.zeros((0, 3)))
        with pytest.raises(DimensionMismatch):
            validate_stochastic([1.0, 0.0])

    def test_idempotent_bitwise(self, rng):
        raw = rand_stochastic(rng, 40, 5) * (1.0 + rng.uniform(-5e-10, 5e-10, size=(40, 1)))
        once = validate_stochastic(raw, tol=1e-9)
        twice = validate_stochastic(once.data, tol=1e-9)
        assert np.array_equal(once.data, twice.data)

    def test_result_is_read_only(self):
        out = validate_stochastic(np.eye(3))
        with pytest.raises(ValueError):
            out.data[0, 0] = 0.5


class TestOneHot:
    def test_round_trip_lossless(self, rng):
        labels = rng.integers(0, 4, size=25)
        hot = OneHotMatrix(labels=labels, cols=4)
        dense = hot.to_stochastic()
        assert np.array_equal(dense.data.argmax(axis=1), labels)
        back = OneHotMatrix.from_dense(dense.data)
        assert np.array_equal(back.labels, labels)
        assert back.cols == 4

    def test_dense_rows_are_unit_vectors(self):
        hot = OneHotMatrix(labels=np.array([2, 0]), cols=3)
        assert np.array_equal(hot.to_stochastic().data, [[0, 0, 1], [1, 0, 0]])

    def test_label_out_of_range(self):
        with pytest.raises(DimensionMismatch):
            OneHotMatrix(labels=np.array([3]), cols=3)
        with pytest.raises(DimensionMismatch):
            OneHotMatrix(labels=np.array([-1]), cols=3)

    def test_from_dense_rejects_soft_rows(self):
        with pytest.raises(ParseError):
            OneHotMatrix.from_dense(np.array([[0.5, 0.5]]))


class TestForwardSelection:
    def test_one_hot_through_identity(self):
        y = OneHotMatrix(labels=np.array([0, 1, 1]), cols=2).to_stochastic()
        s = forward_selection(y, validate_stochastic(np.eye(2)))
        assert np.array_equal(s.data, y.data)

    def test_direct_product_example(self):
        y = validate_stochastic([[0.5, 0.5]])
        t = validate_stochastic([[0.1, 0.9], [0.0, 1.0]])
        s = forward_selection(y, t)
        assert np.allclose(s.data, [[0.05, 0.95]], atol=1e-15)

    def test_identity_transition_is_identity_map(self, rng):
        y = validate_stochastic(rand_stochastic(rng, 30, 4))
        s = forward_selection(y, validate_stochastic(np.eye(4)))
        assert np.array_equal(s.data, y.data)

    def test_inner_dimension_checked(self, rng):
        y = validate_stochastic(rand_stochastic(rng, 5, 3))
        t = validate_stochastic(rand_stochastic(rng, 4, 2))
        with pytest.raises(DimensionMismatch):
            forward_selection(y, t)

    def test_fuzz_products_validate(self, rng):
        # the core invariant asks for >= 1000 random instances
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            m_y = int(rng.integers(1, 7))
            m_s = int(rng.integers(1, 7))
            y = validate_stochastic(rand_stochastic(rng, n, m_y))
            t = validate_stochastic(rand_stochastic(rng, m_y, m_s))
            s = forward_selection(y, t)
            assert np.all(s.data >= 0)
            assert np.abs(s.data.sum(axis=1) - 1.0).max() <= 1e-9


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 8),
    m_y=st.integers(1, 6),
    m_s=st.integers(1, 6),
    seed=st.integers(0, 2**32 - 1),
)
def test_product_of_stochastic_is_stochastic(n, m_y, m_s, seed):
    gen = np.random.default_rng(seed)
    y = validate_stochastic(rand_stochastic(gen, n, m_y))
    t = validate_stochastic(rand_stochastic(gen, m_y, m_s))
    out = forward_selection(y, t)
    assert out.rows == n and out.cols == m_s
    assert np.abs(out.data.sum(axis=1) - 1.0).max() <= 1e-9


class TestLabeledDataset:
    def test_row_count_checked(self):
        with pytest.raises(LengthMismatch):
            LabeledDataset(
                features=np.zeros((3, 2)),
                selections=OneHotMatrix(labels=np.array([0, 1]), cols=2),
            )

    def test_true_class_length_checked(self):
        with pytest.raises(LengthMismatch):
            LabeledDataset(
                features=np.zeros((2, 2)),
                selections=OneHotMatrix(labels=np.array([0, 1]), cols=2),
                true_classes=np.array([0]),
            )

    def test_negative_weights_rejected(self):
        with pytest.raises(NegativeEntry):
            LabeledDataset(
                features=np.zeros((1, 2)),
                selections=OneHotMatrix(labels=np.array([0]), cols=1),
                sample_weights=np.array([-0.5]),
            )

    def test_subset_carries_every_field(self, rng):
        ds = LabeledDataset(
            features=rng.normal(size=(6, 2)),
            selections=OneHotMatrix(labels=rng.integers(0, 3, size=6), cols=3),
            true_classes=rng.integers(0, 2, size=6),
            sample_weights=rng.uniform(0.5, 2.0, size=6),
        )
        sub = ds.subset([4, 0, 2])
        assert sub.n == 3
        assert np.array_equal(sub.features, ds.features[[4, 0, 2]])
        assert np.array_equal(sub.selections.labels, ds.selections.labels[[4, 0, 2]])
        assert np.array_equal(sub.true_classes, ds.true_classes[[4, 0, 2]])
        assert np.array_equal(sub.sample_weights, ds.sample_weights[[4, 0, 2]])

    def test_unlabelled_dataset_has_no_label_width(self):
        ds = LabeledDataset(features=np.zeros((2, 2)), selections=None)
        assert ds.n == 2
        with pytest.raises(DimensionMismatch):
            ds.m_s


class TestPrior:
    def test_class_prior_validated(self):
        with pytest.raises(RowSumViolation):
            Prior(class_prior=[0.5, 0.4])

    def test_dirichlet_shape_checked(self):
        with pytest.raises(DimensionMismatch):
            Prior(class_prior=[0.5, 0.5], dirichlet=np.ones((3, 2)))

    def test_dirichlet_negative_rejected(self):
        with pytest.raises(NegativeEntry):
            Prior(class_prior=[0.5, 0.5], dirichlet=np.array([[1.0, -1.0], [0.0, 0.0]]))

    def test_m_y_property(self, rng):
        prior = Prior(class_prior=rand_prior(rng, 4))
        assert prior.m_y == 4
