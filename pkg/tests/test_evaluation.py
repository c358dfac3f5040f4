"""Scoring and the regime experiment harness."""

import numpy as np
import pytest

from decouple import (
    DomainError,
    ExperimentRecord,
    InsufficientSamples,
    LabeledDataset,
    LengthMismatch,
    MissingTrueClasses,
    ParseError,
    RegimeBundle,
    default_fig2_spec,
    macro_f1,
    records_from_csv,
    records_to_csv,
    run_regime,
    sample_mixture,
    sweep,
    write_plot_csv,
)
from decouple.evaluation import REGIMES, WEIGHTINGS


class TestMacroF1:
    def test_perfect_predictions(self, rng):
        truth = rng.integers(0, 4, size=50)
        assert macro_f1(truth, truth, 4) == 1.0

    def test_flipped_binary(self):
        truth = np.array([0, 0, 1, 1])
        assert macro_f1(1 - truth, truth, 2) == 0.0

    def test_hand_confusion_arithmetic(self):
        truth = np.array([0, 0, 1, 1])
        predicted = np.array([0, 1, 1, 1])
        assert macro_f1(predicted, truth, 2) == pytest.approx(11.0 / 15.0, abs=1e-12)

    def test_class_absent_everywhere_scores_one(self):
        truth = np.array([0, 1])
        predicted = np.array([0, 0])
        # class 0: F1 2/3; class 1: 0; class 2 never occurs: 1
        assert macro_f1(predicted, truth, 3) == pytest.approx((2.0 / 3.0 + 0.0 + 1.0) / 3.0, abs=1e-12)

    def test_joint_relabelling_invariance(self, rng):
        for _ in range(10):
            m = int(rng.integers(2, 6))
            truth = rng.integers(0, m, size=60)
            predicted = rng.integers(0, m, size=60)
            perm = rng.permutation(m)
            base = macro_f1(predicted, truth, m)
            relabelled = macro_f1(perm[predicted], perm[truth], m)
            assert relabelled == pytest.approx(base, abs=1e-12)

    def test_exclusion_drops_a_class_from_the_mean(self):
        truth = np.array([0, 0, 1, 1])
        predicted = np.array([0, 0, 1, 0])
        full = macro_f1(predicted, truth, 2)
        only_one = macro_f1(predicted, truth, 2, exclude_classes=[0])
        # class 1: P=1, R=1/2, F1=2/3; class 0 alone scores 0.8
        assert only_one == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert full == pytest.approx((0.8 + 2.0 / 3.0) / 2.0, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            macro_f1(np.array([0, 1]), np.array([0, 1, 0]), 2)

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            macro_f1(np.array([], dtype=int), np.array([], dtype=int), 2)

    def test_out_of_range_labels_rejected(self):
        with pytest.raises(DomainError):
            macro_f1(np.array([0, 3]), np.array([0, 1]), 2)

    def test_excluding_every_class_rejected(self):
        with pytest.raises(DomainError):
            macro_f1(np.array([0, 1]), np.array([0, 1]), 2, exclude_classes=[0, 1])


class TestExperimentRecord:
    def make(self, **overrides):
        fields = dict(
            regime="semi-supervised",
            labelled_per_class=10,
            seed=0,
            weighting="flat",
            f1_baseline_test=0.5,
            f1_inferred_test=0.6,
            f1_w_train=0.7,
        )
        fields.update(overrides)
        return ExperimentRecord(**fields)

    def test_range_validation(self):
        with pytest.raises(DomainError):
            self.make(f1_inferred_test=1.1)
        with pytest.raises(DomainError):
            self.make(f1_w_train=-0.2)
        assert self.make(f1_labels_passthrough_train=None).f1_labels_passthrough_train is None

    def test_csv_round_trip_lossless(self, tmp_path):
        records = [
            self.make(seed=3, f1_baseline_test=1.0 / 3.0),
            self.make(
                regime="noisy-20",
                seed=4,
                f1_labels_passthrough_train=0.123456789012345678,
            ),
        ]
        path = tmp_path / "results.csv"
        records_to_csv(records, path)
        header = path.read_text().splitlines()[0]
        assert header == (
            "regime,labelled_per_class,seed,weighting,f1_baseline_test,"
            "f1_inferred_test,f1_w_train,f1_labels_passthrough_train"
        )
        assert records_from_csv(path) == records

    def test_csv_round_trip_with_inclusive_columns(self, tmp_path):
        record = self.make(
            regime="positive-unlabelled",
            f1_baseline_test_inclusive=0.25,
            f1_inferred_test_inclusive=0.5,
            f1_w_train_inclusive=0.75,
        )
        path = tmp_path / "results.csv"
        records_to_csv([record], path, inclusive=True)
        assert records_from_csv(path) == [record]

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("regime,seed\nx,1\n")
        with pytest.raises(ParseError):
            records_from_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            records_from_csv(path)


def quick_bundle():
    return RegimeBundle(selection_source="labels", test_on_train=True)


@pytest.fixture(scope="module")
def base_dataset():
    return sample_mixture(default_fig2_spec(), 600, seed=100)


class TestRunRegime:
    def test_supervised_degenerate_is_a_no_op(self, base_dataset):
        record = run_regime("supervised", base_dataset, 100, "flat", [0], quick_bundle())[0]
        assert record.f1_inferred_test == pytest.approx(record.f1_baseline_test, abs=1e-9)
        assert record.f1_w_train == pytest.approx(record.f1_baseline_test, abs=1e-9)

    def test_all_named_regimes_produce_records(self, base_dataset):
        for regime in REGIMES:
            record = run_regime(regime, base_dataset, 20, "flat", [1], quick_bundle())[0]
            assert record.regime == regime
            assert 0.0 <= record.f1_inferred_test <= 1.0
            if regime in ("k-positive", "positive-unlabelled"):
                assert record.f1_inferred_test_inclusive is not None
            else:
                assert record.f1_inferred_test_inclusive is None
            if regime in ("noisy-20", "noisy-50"):
                assert record.f1_labels_passthrough_train is not None
            else:
                assert record.f1_labels_passthrough_train is None

    def test_kde_pipeline_end_to_end(self, base_dataset):
        bundle = RegimeBundle(folds=3)
        record = run_regime("positive-unlabelled", base_dataset, 30, "cost-weighted", [2], bundle)[0]
        assert record.weighting == "cost-weighted"
        assert 0.0 <= record.f1_inferred_test <= 1.0

    def test_true_classes_required(self, rng, base_dataset):
        from decouple import OneHotMatrix

        stripped = LabeledDataset(
            features=base_dataset.features,
            selections=OneHotMatrix(labels=np.zeros(base_dataset.n, dtype=np.int64), cols=2),
        )
        with pytest.raises(MissingTrueClasses):
            run_regime("semi-supervised", stripped, 10, "flat", [0], quick_bundle())

    def test_unknown_regime_and_weighting(self, base_dataset):
        with pytest.raises(DomainError):
            run_regime("transductive", base_dataset, 10, "flat", [0], quick_bundle())
        with pytest.raises(DomainError):
            run_regime("semi-supervised", base_dataset, 10, "quadratic", [0], quick_bundle())

    def test_oversubscribed_labelling_budget(self, base_dataset):
        with pytest.raises(InsufficientSamples):
            run_regime("semi-supervised", base_dataset, 10_000, "flat", [0], quick_bundle())


class TestSweep:
    def test_empty_counts(self, base_dataset):
        assert sweep("semi-supervised", base_dataset, [], WEIGHTINGS, [0], quick_bundle()) == []

    def test_cardinality_and_ordering(self, base_dataset):
        seeds = [0, 1, 2, 3, 4]
        records = sweep(
            "semi-supervised", base_dataset, [10, 50, 100], WEIGHTINGS, seeds, quick_bundle()
        )
        assert len(records) == 30
        for weighting in WEIGHTINGS:
            assert sum(r.weighting == weighting for r in records) == 15
        keys = [(r.labelled_per_class, r.seed, r.weighting) for r in records]
        expected = [(c, s, w) for c in (10, 50, 100) for s in seeds for w in WEIGHTINGS]
        assert keys == expected

    def test_descending_counts_rejected(self, base_dataset):
        with pytest.raises(DomainError):
            sweep("semi-supervised", base_dataset, [50, 10], WEIGHTINGS, [0], quick_bundle())

    def test_parallel_matches_sequential_bytes(self, base_dataset, tmp_path):
        args = ("semi-supervised", base_dataset, [10, 30], ("flat",), [0, 1], quick_bundle())
        sequential = sweep(*args, jobs=1)
        parallel = sweep(*args, jobs=4)
        assert sequential == parallel
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        records_to_csv(sequential, p1)
        records_to_csv(parallel, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestPlotCsv:
    def test_single_seed_has_zero_stderr(self, tmp_path):
        record = ExperimentRecord(
            regime="semi-supervised", labelled_per_class=10, seed=0, weighting="flat",
            f1_baseline_test=0.5, f1_inferred_test=0.75, f1_w_train=0.6,
        )
        path = tmp_path / "plot.csv"
        write_plot_csv([record], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "regime,weighting,metric,labelled_per_class,mean,stderr,seeds"
        inferred = [l for l in lines if ",f1_inferred_test," in l][0]
        assert inferred.split(",")[4:] == ["0.75", "0", "1"]

    def test_two_seeds_aggregate(self, tmp_path):
        records = [
            ExperimentRecord(
                regime="semi-supervised", labelled_per_class=10, seed=s, weighting="flat",
                f1_baseline_test=0.5, f1_inferred_test=v, f1_w_train=0.6,
            )
            for s, v in ((0, 0.6), (1, 0.8))
        ]
        path = tmp_path / "plot.csv"
        write_plot_csv(records, path)
        inferred = [l for l in path.read_text().splitlines() if ",f1_inferred_test," in l][0]
        fields = inferred.split(",")
        assert float(fields[4]) == pytest.approx(0.7, abs=1e-15)
        assert float(fields[5]) == pytest.approx(0.1, abs=1e-12)
        assert fields[6] == "2"
