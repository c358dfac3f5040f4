"""Config-driven batch commands.

Each command takes a validated RunConfig, reads what its section points
at, writes its outputs under ``config.out``, and returns a manifest of the
files written. Identical config and seed always give identical bytes.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path

import numpy as np

from .config import RunConfig
from .core import LabeledDataset, OneHotMatrix, Prior, validate_stochastic
from .costs import cost_matrix, sample_weights
from .density import cross_predict, fit_kde, ingest_predictions, predict_selection
from .errors import InconsistentSpec, ParseError
from .evaluation import RegimeBundle, records_to_csv, sweep, write_plot_csv
from .inference import (
    InferenceResult,
    estimate_t_direct,
    estimate_w,
    infer_joint,
    infer_y_given_t,
)
from .io import read_matrix_csv, write_matrix_csv
from .seeding import child_seed, substream
from .simulation import (
    GaussianMixtureSpec,
    apply_labelling,
    default_fig2_spec,
    load_idx,
    sample_mixture,
)
from .transitions import build_template, t_to_upsilon

logger = logging.getLogger("decouple")


def _require(path: str | None, what: str) -> Path:
    if path is None:
        raise ParseError(f"config does not name a {what} file")
    p = Path(path)
    if not p.exists():
        raise ParseError(f"{what} file does not exist: {p}")
    return p


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_features(config: RunConfig) -> np.ndarray:
    return read_matrix_csv(_require(config.data.features, "features"))


def _read_int_column(path: Path, what: str) -> np.ndarray:
    col = read_matrix_csv(path)
    if col.shape[1] != 1:
        raise ParseError(f"{what} file must have one column, got {col.shape[1]}")
    values = col[:, 0]
    rounded = np.rint(values)
    if np.any(np.abs(values - rounded) > 0):
        raise ParseError(f"{what} file contains non-integer entries")
    return rounded.astype(np.int64)


def _read_selections(config: RunConfig) -> OneHotMatrix:
    labels = _read_int_column(_require(config.data.selections, "selections"), "selections")
    cols = config.data.num_labels
    if cols is None:
        cols = int(labels.max()) + 1 if labels.size else 1
    return OneHotMatrix(labels=labels, cols=cols)


def _read_dataset(config: RunConfig) -> LabeledDataset:
    features = _read_features(config)
    selections = _read_selections(config)
    weights = None
    if config.data.sample_weights is not None:
        col = read_matrix_csv(_require(config.data.sample_weights, "sample_weights"))
        if col.shape[1] != 1:
            raise ParseError("sample_weights file must have one column")
        weights = col[:, 0]
    return LabeledDataset(features=features, selections=selections, sample_weights=weights)


def _mixture_spec(config: RunConfig) -> GaussianMixtureSpec:
    mix = config.simulate.mixture
    if mix.kind == "fig2":
        return default_fig2_spec()
    if not mix.components:
        raise InconsistentSpec("custom mixture requires components")
    return GaussianMixtureSpec(
        components=tuple(c.model_dump() for c in mix.components),
        negative_class=mix.negative_class,
    )


def _class_prior(config: RunConfig, m_y: int) -> np.ndarray:
    explicit = config.inference.class_prior
    if explicit is None:
        return np.full(m_y, 1.0 / m_y)
    prior = np.asarray(explicit, dtype=np.float64)
    if prior.shape != (m_y,):
        raise InconsistentSpec(f"class_prior has {prior.shape} entries, expected {m_y}")
    return prior


def cmd_simulate(config: RunConfig) -> dict:
    """Draw a mixture sample, label it through the transition template, and
    write features, true classes, and selections."""
    out = _out_dir(config)
    spec = _mixture_spec(config)
    unlabelled = sample_mixture(spec, config.simulate.n, seed=config.seed)
    transition, _ = build_template(config.transition.to_spec())
    dataset = apply_labelling(unlabelled, transition, seed=config.seed)
    write_matrix_csv(out / "features.csv", dataset.features, header="features")
    write_matrix_csv(
        out / "true_classes.csv",
        dataset.true_classes[:, None].astype(np.float64),
        header="true classes",
    )
    write_matrix_csv(
        out / "selections.csv",
        dataset.selections.labels[:, None].astype(np.float64),
        header="selection labels",
    )
    write_matrix_csv(out / "transition.csv", transition.data, header="transition matrix")
    written = [out / n for n in ("features.csv", "true_classes.csv", "selections.csv", "transition.csv")]
    logger.info("simulate: wrote %d files to %s", len(written), out)
    return {"written": [str(p) for p in written]}


def cmd_label(config: RunConfig) -> dict:
    """Relabel an existing feature/true-class pair through the template."""
    out = _out_dir(config)
    features = _read_features(config)
    classes = _read_int_column(_require(config.data.true_classes, "true_classes"), "true_classes")
    transition, dirichlet = build_template(config.transition.to_spec())
    dataset = apply_labelling(features, transition, seed=config.seed, true_classes=classes)
    write_matrix_csv(
        out / "selections.csv",
        dataset.selections.labels[:, None].astype(np.float64),
        header="selection labels",
    )
    write_matrix_csv(out / "transition.csv", transition.data, header="transition matrix")
    write_matrix_csv(out / "dirichlet.csv", dirichlet, header="dirichlet pseudo-counts")
    written = [out / n for n in ("selections.csv", "transition.csv", "dirichlet.csv")]
    return {"written": [str(p) for p in written]}


def cmd_fit_kde(config: RunConfig) -> dict:
    """Fit the density classifier and write its in-sample predictions."""
    out = _out_dir(config)
    dataset = _read_dataset(config)
    model = fit_kde(dataset, bandwidth=config.kde.bandwidth)
    s_hat = predict_selection(model, dataset.features)
    write_matrix_csv(out / "s_hat.csv", s_hat.data, header="selection probabilities")
    meta = {
        "n": model.n,
        "labels": model.m_s,
        "bandwidth": model.bandwidth,
        "label_prior": [float(v) for v in model.label_prior],
        "dropped_features": [int(i) for i in model.dropped_features],
    }
    (out / "kde.json").write_text(json.dumps(meta, indent=2) + "\n")
    return {"written": [str(out / "s_hat.csv"), str(out / "kde.json")]}


def cmd_cross_predict(config: RunConfig) -> dict:
    """Write out-of-fold selection probabilities for the training data."""
    out = _out_dir(config)
    dataset = _read_dataset(config)
    s_hat = cross_predict(
        dataset, folds=config.kde.folds, bandwidth=config.kde.bandwidth, seed=config.seed
    )
    write_matrix_csv(out / "s_hat.csv", s_hat.data, header="selection probabilities")
    return {"written": [str(out / "s_hat.csv")]}


def _load_s_hat(config: RunConfig):
    if config.inference.s_hat is not None:
        return ingest_predictions(_require(config.inference.s_hat, "s_hat"))
    dataset = _read_dataset(config)
    return cross_predict(
        dataset, folds=config.kde.folds, bandwidth=config.kde.bandwidth, seed=config.seed
    )


def cmd_infer(config: RunConfig) -> dict:
    """Run MAP inference on selection probabilities.

    With ``inference.known_t`` set, the transition is read from file and
    held fixed (class memberships only); otherwise the transition template
    supplies pseudo-counts and the joint estimate runs.
    """
    out = _out_dir(config)
    s_hat = _load_s_hat(config)
    opt = config.inference.to_config(config.seed)

    if config.inference.known_t is not None:
        t_known = validate_stochastic(
            read_matrix_csv(_require(config.inference.known_t, "transition")), tol=1e-6
        )
        prior_vec = _class_prior(config, t_known.rows)
        y_hat = infer_y_given_t(s_hat, t_known, prior_vec, opt)
        result = InferenceResult(
            y_hat=y_hat,
            t_hat=t_known,
            objective_trace=np.asarray([0.0]),
            converged=True,
            iterations=0,
        )
        mode = "y-given-t"
    else:
        transition, dirichlet = build_template(config.transition.to_spec())
        prior_vec = _class_prior(config, transition.rows)
        prior = Prior(class_prior=prior_vec, dirichlet=dirichlet)
        result = infer_joint(s_hat, prior, opt)
        mode = "joint"

    if config.data.selections is not None:
        selections = _read_selections(config)
        w_hat = estimate_w(result.y_hat, result.t_hat, selections)
        result = dataclasses.replace(result, w_hat=w_hat)

    written = result.export(out)
    meta = json.loads((out / "metadata.json").read_text())
    meta["mode"] = mode
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")
    logger.info("infer (%s): %d files to %s", mode, len(written), out)
    return {"written": written}


def cmd_estimate_t(config: RunConfig) -> dict:
    """Closed-form transition estimate from soft classes and hard labels."""
    out = _out_dir(config)
    y_hat = validate_stochastic(
        read_matrix_csv(_require(config.estimate.y_hat, "y_hat")), tol=1e-6
    )
    selections = _read_selections(config)
    dirichlet = None
    if config.estimate.use_dirichlet:
        transition, dirichlet = build_template(config.transition.to_spec())
        if transition.rows != y_hat.cols or transition.cols != selections.cols:
            raise InconsistentSpec(
                "transition template dimensions do not match y_hat and selections; "
                "set estimate.use_dirichlet false or fix the transition section"
            )
    t_hat = estimate_t_direct(y_hat, selections, dirichlet)
    write_matrix_csv(out / "t_hat.csv", t_hat.data, header="transition matrix")
    return {"written": [str(out / "t_hat.csv")]}


def cmd_estimate_w(config: RunConfig) -> dict:
    """Correct hard labels into class posteriors from Y_hat and T_hat."""
    out = _out_dir(config)
    y_hat = validate_stochastic(
        read_matrix_csv(_require(config.estimate.y_hat, "y_hat")), tol=1e-6
    )
    t_hat = validate_stochastic(
        read_matrix_csv(_require(config.estimate.t_hat, "t_hat")), tol=1e-6
    )
    selections = _read_selections(config)
    w_hat = estimate_w(y_hat, t_hat, selections)
    write_matrix_csv(out / "w_hat.csv", w_hat.data, header="corrected labels")
    return {"written": [str(out / "w_hat.csv")]}


def cmd_costs(config: RunConfig) -> dict:
    """Cost matrix and per-label weights implied by the transition template."""
    out = _out_dir(config)
    transition, _ = build_template(config.transition.to_spec())
    prior_vec = _class_prior(config, transition.rows)
    upsilon = t_to_upsilon(transition, prior_vec)
    costs = cost_matrix(upsilon)
    if config.costs.label_prior is not None:
        label_prior = np.asarray(config.costs.label_prior, dtype=np.float64)
    else:
        label_prior = prior_vec @ transition.data
    weights = sample_weights(
        costs, label_prior, mode=config.costs.mode, normalize=config.costs.normalize
    )
    write_matrix_csv(out / "costs.csv", costs.data, header="label confusion costs")
    write_matrix_csv(out / "weights.csv", weights[:, None], header="label weights")
    return {"written": [str(out / "costs.csv"), str(out / "weights.csv")]}


def _experiment_base(config: RunConfig) -> LabeledDataset:
    exp = config.experiment
    if exp.base.kind == "fig2":
        return sample_mixture(default_fig2_spec(), exp.base.n, seed=child_seed(config.seed, "base"))
    else:
        dataset = load_idx(
            _require(exp.base.images, "images"), _require(exp.base.labels, "labels")
        )
        features, classes = dataset.features, dataset.true_classes
        if exp.base.classes is not None:
            wanted = np.asarray(exp.base.classes, dtype=np.int64)
            mask = np.isin(classes, wanted)
            features, classes = features[mask], classes[mask]
            remap = np.zeros(int(wanted.max()) + 1, dtype=np.int64)
            remap[wanted] = np.arange(wanted.size)
            classes = remap[classes]
        if exp.base.subsample is not None and exp.base.subsample < classes.size:
            pick = substream(config.seed, "subsample").choice(
                classes.size, size=exp.base.subsample, replace=False
            )
            pick.sort()
            features, classes = features[pick], classes[pick]
        if classes.size == 0:
            raise InconsistentSpec("base dataset is empty after filtering")
    return LabeledDataset(features=features, selections=None, true_classes=classes)


def cmd_experiment(config: RunConfig) -> dict:
    """Run one regime's sweep and write result and plot-data tables."""
    out = _out_dir(config)
    exp = config.experiment
    base = _experiment_base(config)
    bundle = RegimeBundle(
        train_fraction=exp.train_fraction,
        folds=exp.folds,
        bandwidth=exp.bandwidth,
        inference=dataclasses.replace(
            config.inference.to_config(config.seed),
            max_iters=exp.max_iters,
            objective_tol=exp.objective_tol,
        ),
        prior_strength=exp.prior_strength,
        positive_class=exp.positive_class,
        k_positive=exp.k_positive,
        selection_source=exp.selection_source,
        test_on_train=exp.test_on_train,
        cost_mode=exp.cost_mode,
        cost_normalize=exp.cost_normalize,
    )
    records = sweep(
        exp.regime,
        base,
        exp.labelled_counts,
        exp.weightings,
        exp.seeds,
        bundle,
        jobs=config.jobs,
    )
    records_to_csv(records, out / "results.csv")
    records_to_csv(records, out / "results_inclusive.csv", inclusive=True)
    write_plot_csv(records, out / "plot_data.csv")
    written = [str(out / n) for n in ("results.csv", "results_inclusive.csv", "plot_data.csv")]
    logger.info("experiment: %d records to %s", len(records), out)
    return {"written": written}


COMMANDS = {
    "simulate": cmd_simulate,
    "label": cmd_label,
    "fit-kde": cmd_fit_kde,
    "cross-predict": cmd_cross_predict,
    "infer": cmd_infer,
    "estimate-t": cmd_estimate_t,
    "estimate-w": cmd_estimate_w,
    "costs": cmd_costs,
    "experiment": cmd_experiment,
}


def run_command(name: str, config: RunConfig) -> dict:
    if name not in COMMANDS:
        raise ParseError(f"unknown command {name!r}; expected one of {sorted(COMMANDS)}")
    return COMMANDS[name](config)
