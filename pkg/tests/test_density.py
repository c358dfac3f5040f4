"""Weighted kernel-density selection classifier."""

import warnings

import numpy as np
import pytest

from decouple import (
    AllZeroVariance,
    DimensionMismatch,
    DomainError,
    EmptyDataset,
    FoldTooSmall,
    KdeClassifier,
    LabeledDataset,
    OneHotMatrix,
    ParseError,
    RowSumViolation,
    cross_predict,
    fit_kde,
    ingest_predictions,
    predict_selection,
    validate_stochastic,
    write_matrix_csv,
)


def make_dataset(rng, n=30, d=2, m_s=3, weights=None):
    labels = np.arange(n) % m_s
    features = rng.normal(size=(n, d)) + labels[:, None] * 2.0
    return LabeledDataset(
        features=features,
        selections=OneHotMatrix(labels=labels, cols=m_s),
        sample_weights=weights,
    )


class TestFitAndPredict:
    def test_peak_at_own_training_point(self):
        features = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
        ds = LabeledDataset(
            features=features,
            selections=OneHotMatrix(labels=np.array([0, 1, 2]), cols=3),
        )
        model = fit_kde(ds)
        pred = predict_selection(model, features)
        assert np.array_equal(pred.data.argmax(axis=1), [0, 1, 2])

    def test_midpoint_of_symmetric_pair_is_even(self):
        ds = LabeledDataset(
            features=np.array([[-1.0], [1.0]]),
            selections=OneHotMatrix(labels=np.array([0, 1]), cols=2),
        )
        pred = predict_selection(fit_kde(ds), np.array([[0.0]]))
        assert np.allclose(pred.data, [[0.5, 0.5]], atol=1e-12)

    def test_doubling_weights_changes_nothing(self, rng):
        # normalization cancels the common factor everywhere except the
        # total-mass bandwidth rule, so pin the bandwidth
        ds = make_dataset(rng, weights=np.full(30, 1.0))
        doubled = LabeledDataset(
            features=ds.features,
            selections=ds.selections,
            sample_weights=np.full(30, 2.0),
        )
        queries = rng.normal(size=(8, 2))
        base = predict_selection(fit_kde(ds, bandwidth=0.7), queries)
        scaled = predict_selection(fit_kde(doubled, bandwidth=0.7), queries)
        assert np.allclose(base.data, scaled.data, atol=1e-12)

    def test_far_query_flattens_to_label_prior(self, rng):
        # well past the underflow floor every label density is identical,
        # so only the prior survives
        ds = make_dataset(rng, n=9, m_s=3)
        model = fit_kde(ds)
        far = np.full((1, 2), 1e6)
        pred = predict_selection(model, far)
        assert np.allclose(pred.data[0], model.label_prior, atol=1e-12)

    def test_two_point_loo_trusts_the_other_point(self):
        ds = LabeledDataset(
            features=np.array([[0.0], [1.0]]),
            selections=OneHotMatrix(labels=np.array([0, 1]), cols=2),
        )
        pred = predict_selection(fit_kde(ds), ds.features, loo=True)
        # with its own kernel removed, each point sees only the opposite label
        assert pred.data[0, 0] < 1e-100
        assert pred.data[1, 1] < 1e-100
        assert pred.data[0, 1] == pytest.approx(1.0, abs=1e-15)
        assert pred.data[1, 0] == pytest.approx(1.0, abs=1e-15)

    def test_rows_validate_and_stay_positive(self, rng):
        for _ in range(5):
            ds = make_dataset(rng, n=int(rng.integers(6, 40)))
            pred = predict_selection(fit_kde(ds), rng.normal(size=(10, 2)) * 30.0)
            validate_stochastic(pred.data, tol=1e-9)
            assert np.all(pred.data > 0.0)

    def test_huge_bandwidth_converges_to_prior(self, rng):
        ds = make_dataset(rng, n=20)
        model = fit_kde(ds, bandwidth=1e3)
        pred = predict_selection(model, ds.features)
        assert np.abs(pred.data - model.label_prior).max() <= 1e-3

    def test_split_weight_duplicate_is_one_sample(self, rng):
        features = rng.normal(size=(6, 2))
        labels = np.array([0, 1, 2, 0, 1, 2])
        base = LabeledDataset(
            features=features,
            selections=OneHotMatrix(labels=labels, cols=3),
            sample_weights=np.ones(6),
        )
        split = LabeledDataset(
            features=np.vstack([features, features[:1]]),
            selections=OneHotMatrix(labels=np.append(labels, labels[0]), cols=3),
            sample_weights=np.array([0.5, 1, 1, 1, 1, 1, 0.5]),
        )
        queries = rng.normal(size=(7, 2))
        a = predict_selection(fit_kde(base), queries)
        b = predict_selection(fit_kde(split), queries)
        assert np.abs(a.data - b.data).max() <= 1e-12

    def test_refit_on_standardized_features_is_idempotent(self, rng):
        ds = make_dataset(rng, n=24)
        before = ds.features.copy()
        model = fit_kde(ds)
        assert np.array_equal(ds.features, before)

        restd = LabeledDataset(
            features=model.transform(ds.features),
            selections=ds.selections,
        )
        again = fit_kde(restd)
        queries = rng.normal(size=(5, 2))
        a = predict_selection(model, queries)
        b = predict_selection(again, model.transform(queries))
        assert np.abs(a.data - b.data).max() <= 1e-12

    def test_zero_variance_feature_dropped(self, rng):
        features = np.column_stack([rng.normal(size=12), np.full(12, 3.25)])
        ds = LabeledDataset(
            features=features,
            selections=OneHotMatrix(labels=np.arange(12) % 2, cols=2),
        )
        model = fit_kde(ds)
        assert np.array_equal(model.dropped_features, [1])
        assert np.array_equal(model.kept_features, [0])
        pred = predict_selection(model, features)
        validate_stochastic(pred.data, tol=1e-9)

    def test_all_zero_variance_rejected(self):
        ds = LabeledDataset(
            features=np.ones((4, 2)),
            selections=OneHotMatrix(labels=np.array([0, 1, 0, 1]), cols=2),
        )
        with pytest.raises(AllZeroVariance):
            fit_kde(ds)

    def test_zero_total_weight_rejected(self, rng):
        ds = make_dataset(rng, n=6, weights=np.zeros(6))
        with pytest.raises(EmptyDataset):
            fit_kde(ds)

    def test_nonpositive_bandwidth_rejected(self, rng):
        with pytest.raises(DomainError):
            fit_kde(make_dataset(rng, n=6), bandwidth=0.0)

    def test_loo_requires_training_alignment(self, rng):
        ds = make_dataset(rng, n=10)
        model = fit_kde(ds)
        with pytest.raises(DimensionMismatch):
            predict_selection(model, rng.normal(size=(4, 2)), loo=True)

    def test_query_width_checked(self, rng):
        model = fit_kde(make_dataset(rng, n=10, d=3))
        with pytest.raises(DimensionMismatch):
            predict_selection(model, rng.normal(size=(2, 2)))


class TestCrossPredict:
    def test_full_folds_equal_leave_one_out(self, rng):
        ds = make_dataset(rng, n=20)
        via_folds = cross_predict(ds, folds=20)
        via_loo = predict_selection(fit_kde(ds), ds.features, loo=True)
        assert np.array_equal(via_folds.data, via_loo.data)

    def test_two_folds_valid(self, rng):
        ds = make_dataset(rng, n=24)
        out = cross_predict(ds, folds=2)
        validate_stochastic(out.data, tol=1e-9)
        assert out.rows == 24

    def test_same_seed_is_bitwise_deterministic(self, rng):
        ds = make_dataset(rng, n=18)
        a = cross_predict(ds, folds=3, seed=11)
        b = cross_predict(ds, folds=3, seed=11)
        assert np.array_equal(a.data, b.data)

    def test_starved_fold_falls_back_to_prior(self, rng):
        # label 2 has a single carrier, so the fold holding it must warn
        labels = np.array([0, 1, 0, 1, 0, 1, 0, 1, 2])
        ds = LabeledDataset(
            features=rng.normal(size=(9, 2)),
            selections=OneHotMatrix(labels=labels, cols=3),
        )
        model = fit_kde(ds)
        with pytest.warns(FoldTooSmall):
            out = cross_predict(ds, folds=2, seed=0)
        fallback_rows = np.isclose(out.data, model.label_prior, atol=1e-12).all(axis=1)
        assert fallback_rows.any()

    def test_fold_count_bounds(self, rng):
        ds = make_dataset(rng, n=10)
        with pytest.raises(DomainError):
            cross_predict(ds, folds=1)
        with pytest.raises(DomainError):
            cross_predict(ds, folds=11)


class TestIngestPredictions:
    def test_well_formed_matrix(self, tmp_path):
        path = tmp_path / "s_hat.csv"
        write_matrix_csv(path, np.array([[0.2, 0.8], [1.0, 0.0], [0.5, 0.5]]))
        out = ingest_predictions(path, expected_labels=2)
        assert out.rows == 3 and out.cols == 2

    def test_row_sum_violation(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_matrix_csv(path, np.array([[0.2, 0.78]]))
        with pytest.raises(RowSumViolation):
            ingest_predictions(path)

    def test_header_only_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("a,b\n")
        with pytest.raises(ParseError):
            ingest_predictions(path)


class TestKdeClassifier:
    def test_one_hot_targets_match_fit_kde(self, rng):
        ds = make_dataset(rng, n=15)
        queries = rng.normal(size=(6, 2))
        direct = predict_selection(fit_kde(ds), queries)
        clf = KdeClassifier().fit_soft(ds.features, ds.selections.to_stochastic().data)
        assert np.allclose(clf.predict_proba(queries), direct.data, atol=1e-12)

    def test_soft_targets_fit_and_predict(self, rng):
        features = rng.normal(size=(12, 2))
        targets = rng.uniform(0.1, 1.0, size=(12, 3))
        clf = KdeClassifier().fit_soft(features, targets)
        out = clf.predict_proba(features, loo=True)
        validate_stochastic(out, tol=1e-9)

    def test_unfitted_rejected(self, rng):
        with pytest.raises(EmptyDataset):
            KdeClassifier().predict_proba(rng.normal(size=(2, 2)))

    def test_negative_targets_rejected(self, rng):
        with pytest.raises(DomainError):
            KdeClassifier().fit_soft(rng.normal(size=(3, 2)), -np.ones((3, 2)))
