"""Experiment harness: labelling regimes, scoring, and result tables."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import LabeledDataset, Prior, RowStochasticMatrix
from .costs import attach_weights, cost_matrix, sample_weights
from .density import cross_predict, fit_kde, predict_selection
from .errors import (
    DomainError,
    InconsistentSpec,
    InsufficientSamples,
    LengthMismatch,
    MissingTrueClasses,
    ParseError,
)
from .inference import InferenceConfig, estimate_w, infer_joint, infer_y_given_t
from .seeding import child_seed, substream
from .transitions import TransitionKind, TransitionSpec, build_template, t_to_upsilon

REGIMES = (
    "semi-supervised",
    "k-positive",
    "positive-unlabelled",
    "noisy-20",
    "noisy-50",
)

WEIGHTINGS = ("flat", "cost-weighted")

RESULT_FIELDS = (
    "regime",
    "labelled_per_class",
    "seed",
    "weighting",
    "f1_baseline_test",
    "f1_inferred_test",
    "f1_w_train",
    "f1_labels_passthrough_train",
)

_EXTRA_FIELDS = (
    "f1_baseline_test_inclusive",
    "f1_inferred_test_inclusive",
    "f1_w_train_inclusive",
)


def macro_f1(
    predicted: np.ndarray,
    truth: np.ndarray,
    num_classes: int,
    exclude_classes: Sequence[int] = (),
) -> float:
    """Unweighted mean of per-class F1.

    A class absent from both ``predicted`` and ``truth`` contributes a
    perfect score of 1, so a classifier is not punished for classes that
    never occur.  ``exclude_classes`` removes classes from the average
    entirely (their samples still count as confusions for other classes).
    """
    predicted = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise LengthMismatch("predicted and truth must be equal-length 1-d arrays")
    if predicted.size == 0:
        raise DomainError("cannot score an empty prediction set")
    if num_classes < 1:
        raise DomainError("num_classes must be positive")
    for arr, name in ((predicted, "predicted"), (truth, "truth")):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise DomainError(f"{name} contains labels outside [0, {num_classes})")
    confusion = np.bincount(
        truth * num_classes + predicted, minlength=num_classes * num_classes
    ).reshape(num_classes, num_classes)
    keep = np.setdiff1d(np.arange(num_classes), np.asarray(exclude_classes, dtype=np.int64))
    if keep.size == 0:
        raise DomainError("exclude_classes removes every class")
    scores = np.empty(keep.size)
    for j, c in enumerate(keep):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        if tp == 0 and fp == 0 and fn == 0:
            scores[j] = 1.0
        elif tp == 0:
            scores[j] = 0.0
        else:
            scores[j] = 2.0 * tp / (2.0 * tp + fp + fn)
    return float(scores.mean())


@dataclass(frozen=True)
class ExperimentRecord:
    """One (regime, labelling budget, seed, weighting) measurement."""

    regime: str
    labelled_per_class: int
    seed: int
    weighting: str
    f1_baseline_test: float
    f1_inferred_test: float
    f1_w_train: float
    f1_labels_passthrough_train: float | None = None
    f1_baseline_test_inclusive: float | None = None
    f1_inferred_test_inclusive: float | None = None
    f1_w_train_inclusive: float | None = None

    def __post_init__(self) -> None:
        for name in (
            "f1_baseline_test",
            "f1_inferred_test",
            "f1_w_train",
            "f1_labels_passthrough_train",
            "f1_baseline_test_inclusive",
            "f1_inferred_test_inclusive",
            "f1_w_train_inclusive",
        ):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise DomainError(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class RegimeBundle:
    """Knobs shared by every run of the experiment harness.

    ``selection_source`` picks where the selection probabilities come
    from: ``"kde"`` fits the density classifier, ``"labels"`` uses the
    recorded selections directly (degenerate but exact; requires
    ``test_on_train``).
    """

    train_fraction: float = 0.5
    folds: int = 5
    bandwidth: float | None = None
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    prior_strength: float = 10.0
    positive_class: int = 0
    k_positive: int | None = None
    selection_source: str = "kde"
    test_on_train: bool = False
    cost_mode: str = "expected-increase"
    cost_normalize: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction <= 1.0:
            raise DomainError("train_fraction must lie in (0, 1]")
        if self.folds < 2:
            raise DomainError("folds must be at least 2")
        if self.selection_source not in ("kde", "labels"):
            raise DomainError(
                f"unknown selection_source {self.selection_source!r}"
            )
        if self.selection_source == "labels" and not self.test_on_train:
            raise InconsistentSpec(
                "selection_source='labels' only makes sense with test_on_train"
            )


def _regime_plan(regime: str, base_classes: int, bundle: RegimeBundle):
    """Return (class_map, m_y, kind, negative_index, noise_rate).

    ``class_map`` sends a base mixture class to the class index used by
    the regime; regimes with fewer classes fold the leftovers into the
    negative class.
    """
    if regime == "supervised":
        return np.arange(base_classes), base_classes, TransitionKind.SUPERVISED, None, 0.0
    if regime == "semi-supervised":
        return np.arange(base_classes), base_classes, TransitionKind.SEMI_SUPERVISED, None, 0.0
    if regime == "noisy-20":
        return np.arange(base_classes), base_classes, TransitionKind.SEMI_SUPERVISED, None, 0.2
    if regime == "noisy-50":
        return np.arange(base_classes), base_classes, TransitionKind.SEMI_SUPERVISED, None, 0.5
    if regime == "k-positive":
        k = bundle.k_positive if bundle.k_positive is not None else base_classes - 1
        if not 1 <= k < base_classes:
            raise DomainError(f"k_positive must lie in [1, {base_classes})")
        mapping = np.minimum(np.arange(base_classes), k)
        return mapping, k + 1, TransitionKind.MULTI_POSITIVE_WITH_NEGATIVE, k, 0.0
    if regime == "positive-unlabelled":
        mapping = np.where(np.arange(base_classes) == bundle.positive_class, 0, 1)
        if bundle.positive_class >= base_classes:
            raise DomainError("positive_class outside the base class range")
        return mapping, 2, TransitionKind.POSITIVE_UNLABELLED, 1, 0.0
    raise DomainError(
        f"unknown regime {regime!r}; expected one of {REGIMES + ('supervised',)}"
    )


def _static_label_map(
    transition: RowStochasticMatrix, dirichlet: np.ndarray, class_prior: np.ndarray
) -> np.ndarray:
    """Most likely class per label under the template and a class prior.

    This is the baseline's fixed mapping: argmax over the Bayes posterior
    column, falling back to the pseudo-count structure for labels the
    template never emits.
    """
    joint = transition.data * class_prior[:, None]
    mapping = np.zeros(transition.cols, dtype=np.int64)
    for s in range(transition.cols):
        column = joint[:, s] if joint[:, s].sum() > 0.0 else dirichlet[:, s]
        mapping[s] = int(np.argmax(column)) if column.max() > 0.0 else 0
    return mapping


def _split(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    perm = substream(seed, "split").permutation(n)
    cut = int(round(n * fraction))
    cut = max(1, min(n, cut))
    return perm[:cut], perm[cut:]


def run_regime(
    regime: str,
    base: LabeledDataset,
    labelled_per_class: int,
    weighting: str,
    seeds: Sequence[int],
    bundle: RegimeBundle | None = None,
) -> list[ExperimentRecord]:
    """Simulate a labelling regime on ``base`` and score the full pipeline.

    ``base`` must carry true classes; its recorded selections are ignored
    and regenerated from the regime's transition matrix.  One record per
    seed.  Scores for the regimes that drop classes into a catch-all
    negative (k-positive, positive-unlabelled) exclude that class from
    the headline numbers and report the inclusive variants alongside.
    """
    bundle = bundle if bundle is not None else RegimeBundle()
    if weighting not in WEIGHTINGS:
        raise DomainError(f"unknown weighting {weighting!r}; expected one of {WEIGHTINGS}")
    if base.true_classes is None:
        raise MissingTrueClasses("regime simulation needs true classes on the base dataset")
    if labelled_per_class < 1:
        raise DomainError("labelled_per_class must be positive")
    base_classes = int(base.true_classes.max()) + 1
    class_map, m_y, kind, negative, noise = _regime_plan(regime, base_classes, bundle)
    mapped = class_map[base.true_classes]
    exclude = (negative,) if regime in ("k-positive", "positive-unlabelled") else ()

    records = []
    for seed in seeds:
        records.append(
            _run_one(
                regime, base, mapped, m_y, kind, negative, noise, exclude,
                labelled_per_class, weighting, int(seed), bundle,
            )
        )
    return records


def _run_one(
    regime: str,
    base: LabeledDataset,
    mapped: np.ndarray,
    m_y: int,
    kind: TransitionKind,
    negative: int | None,
    noise: float,
    exclude: tuple,
    labelled_per_class: int,
    weighting: str,
    seed: int,
    bundle: RegimeBundle,
) -> ExperimentRecord:
    from .simulation import apply_labelling

    n = base.n
    if bundle.test_on_train:
        train_idx = np.arange(n)
        test_idx = np.arange(n)
    else:
        train_idx, test_idx = _split(n, bundle.train_fraction, seed)
        if test_idx.size == 0:
            raise DomainError("train_fraction leaves no test samples; use test_on_train")
    x_train, x_test = base.features[train_idx], base.features[test_idx]
    y_train, y_test_true = mapped[train_idx], mapped[test_idx]

    positive = [c for c in range(m_y) if c != negative]
    counts = np.bincount(y_train, minlength=m_y)[positive]
    if counts.min() == 0:
        raise InsufficientSamples(
            f"a positive class has no training samples under seed {seed}"
        )
    if labelled_per_class > counts.min():
        raise InsufficientSamples(
            f"labelled_per_class={labelled_per_class} exceeds the smallest "
            f"positive-class count {int(counts.min())}"
        )
    label_rate = min(1.0, labelled_per_class / float(counts.mean()))

    spec = TransitionSpec(
        kind=kind,
        m_y=m_y,
        m_s=m_y + 1 if kind is TransitionKind.SEMI_SUPERVISED else m_y,
        label_rate=1.0 if kind is TransitionKind.SUPERVISED else label_rate,
        noise_rate=noise,
        prior_strength=bundle.prior_strength,
    )
    t_true, dirichlet = build_template(spec)
    m_s = t_true.cols

    train_ds = apply_labelling(
        x_train, t_true, seed=child_seed(seed, "labelling"), true_classes=y_train
    )

    uniform = np.full(m_y, 1.0 / m_y)
    if weighting == "cost-weighted":
        upsilon = t_to_upsilon(t_true, uniform)
        costs = cost_matrix(upsilon)
        lp = np.bincount(train_ds.selections.labels, minlength=m_s) / train_ds.n
        w_s = sample_weights(costs, lp, mode=bundle.cost_mode, normalize=bundle.cost_normalize)
        train_ds = attach_weights(train_ds, w_s)

    if bundle.selection_source == "labels":
        s_train = train_ds.selections.to_stochastic()
        s_test = s_train
    else:
        folds = min(bundle.folds, train_ds.n)
        s_train = cross_predict(
            train_ds, folds=folds, bandwidth=bundle.bandwidth,
            seed=child_seed(seed, "folds"),
        )
        model = fit_kde(train_ds, bandwidth=bundle.bandwidth)
        s_test = predict_selection(model, x_test)

    prior = Prior(class_prior=uniform, dirichlet=dirichlet)
    result = infer_joint(s_train, prior, bundle.inference)
    y_test_hat = infer_y_given_t(s_test, result.t_hat, uniform, bundle.inference)
    w_hat = estimate_w(result.y_hat, result.t_hat, train_ds.selections)

    label_to_class = _static_label_map(t_true, dirichlet, uniform)

    pred_baseline = label_to_class[np.argmax(s_test.data, axis=1)]
    pred_inferred = np.argmax(y_test_hat.data, axis=1)
    pred_w = np.argmax(w_hat.data, axis=1)

    f1_baseline = macro_f1(pred_baseline, y_test_true, m_y, exclude)
    f1_inferred = macro_f1(pred_inferred, y_test_true, m_y, exclude)
    f1_w = macro_f1(pred_w, y_train, m_y, exclude)

    passthrough = None
    if regime in ("noisy-20", "noisy-50"):
        labels = train_ds.selections.labels
        labelled = labels != m_s - 1
        pred_pass = np.where(labelled, label_to_class[labels], pred_w)
        passthrough = macro_f1(pred_pass, y_train, m_y, exclude)

    extras = {}
    if exclude:
        extras = {
            "f1_baseline_test_inclusive": macro_f1(pred_baseline, y_test_true, m_y),
            "f1_inferred_test_inclusive": macro_f1(pred_inferred, y_test_true, m_y),
            "f1_w_train_inclusive": macro_f1(pred_w, y_train, m_y),
        }

    return ExperimentRecord(
        regime=regime,
        labelled_per_class=labelled_per_class,
        seed=seed,
        weighting=weighting,
        f1_baseline_test=f1_baseline,
        f1_inferred_test=f1_inferred,
        f1_w_train=f1_w,
        f1_labels_passthrough_train=passthrough,
        **extras,
    )


def sweep(
    regime: str,
    base: LabeledDataset,
    labelled_counts: Sequence[int],
    weightings: Sequence[str],
    seeds: Sequence[int],
    bundle: RegimeBundle | None = None,
    jobs: int = 1,
) -> list[ExperimentRecord]:
    """Run every (weighting, labelled count, seed) cell of one regime.

    ``labelled_counts`` must be strictly ascending.  ``jobs`` > 1 fans the
    cells over a thread pool; the returned order matches the sequential
    one either way.
    """
    counts = [int(c) for c in labelled_counts]
    if counts != sorted(set(counts)):
        raise DomainError("labelled_counts must be strictly ascending")
    if jobs < 1:
        raise DomainError("jobs must be positive")
    tasks = [(w, c, s) for c in counts for s in seeds for w in weightings]

    def cell(task):
        w, c, s = task
        return run_regime(regime, base, c, w, [s], bundle)[0]

    if jobs == 1:
        return [cell(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(cell, tasks))


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def records_to_csv(records: Sequence[ExperimentRecord], path, inclusive: bool = False) -> None:
    """Write records as CSV.  ``inclusive`` appends the inclusive-score
    columns after the standard eight."""
    fields = RESULT_FIELDS + (_EXTRA_FIELDS if inclusive else ())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for rec in records:
            writer.writerow([_format(getattr(rec, f)) for f in fields])


def records_from_csv(path) -> list[ExperimentRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty results file") from None
        if tuple(header[: len(RESULT_FIELDS)]) != RESULT_FIELDS:
            raise ParseError(f"{path}: unexpected results header {header!r}")
        extras = tuple(header[len(RESULT_FIELDS):])
        if extras not in ((), _EXTRA_FIELDS):
            raise ParseError(f"{path}: unexpected extra columns {extras!r}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields")
            named = dict(zip(header, row))
            try:
                records.append(
                    ExperimentRecord(
                        regime=named["regime"],
                        labelled_per_class=int(named["labelled_per_class"]),
                        seed=int(named["seed"]),
                        weighting=named["weighting"],
                        f1_baseline_test=float(named["f1_baseline_test"]),
                        f1_inferred_test=float(named["f1_inferred_test"]),
                        f1_w_train=float(named["f1_w_train"]),
                        f1_labels_passthrough_train=(
                            float(named["f1_labels_passthrough_train"])
                            if named["f1_labels_passthrough_train"]
                            else None
                        ),
                        **{
                            k: float(named[k]) if named.get(k) else None
                            for k in _EXTRA_FIELDS
                            if extras
                        },
                    )
                )
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return records


_PLOT_METRICS = (
    "f1_baseline_test",
    "f1_inferred_test",
    "f1_w_train",
    "f1_labels_passthrough_train",
)


def write_plot_csv(records: Sequence[ExperimentRecord], path) -> None:
    """Aggregate records to per-cell mean and standard error for plotting.

    One row per (regime, weighting, metric, labelled_per_class) with at
    least one value; stderr is 0 for a single seed.
    """
    cells: dict[tuple, list[float]] = {}
    for rec in records:
        for metric in _PLOT_METRICS:
            value = getattr(rec, metric)
            if value is None:
                continue
            key = (rec.regime, rec.weighting, metric, rec.labelled_per_class)
            cells.setdefault(key, []).append(value)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["regime", "weighting", "metric", "labelled_per_class", "mean", "stderr", "seeds"]
        )
        for key in sorted(cells):
            values = cells[key]
            mean = sum(values) / len(values)
            if len(values) > 1:
                var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
                stderr = math.sqrt(var / len(values))
            else:
                stderr = 0.0
            writer.writerow(
                [key[0], key[1], key[2], key[3], _format(mean), _format(stderr), len(values)]
            )
