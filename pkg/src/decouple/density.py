"""Weighted Gaussian kernel density classifier over selection labels.

Densities are isotropic Gaussian product kernels in standardized feature
space with one shared bandwidth; each label's density is a weighted average
of its samples' kernels, and predictions combine the densities with the
label prior. Everything runs in log space; the shared normalizing factor of
the kernel cancels in the posterior and is dropped before the numerical
floor is applied.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import LabeledDataset, RowStochasticMatrix, validate_stochastic
from .errors import (
    AllZeroVariance,
    DimensionMismatch,
    DomainError,
    EmptyDataset,
    FoldTooSmall,
)
from .io import read_matrix_csv
from .seeding import substream

# Smallest log-density kept before posterior normalization; exp(-745) is
# the edge of double-precision underflow, so far-away queries flatten to
# the label prior instead of producing spurious certainty.
LOG_DENSITY_FLOOR = -745.0


@dataclass(frozen=True, eq=False)
class KdeModel:
    """Fitted per-label weighted kernel densities.

    points holds the standardized training features (zero-variance features
    dropped; their indices are recorded), label_weights is the (n, m_s)
    per-label weight matrix, and label_prior the weighted label marginals.
    """

    points: np.ndarray
    label_weights: np.ndarray
    label_prior: np.ndarray
    bandwidth: float
    shift: np.ndarray
    scale: np.ndarray
    kept_features: np.ndarray
    dropped_features: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m_s(self) -> int:
        return self.label_weights.shape[1]

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.shift.shape[0] + self.dropped_features.shape[0]:
            raise DimensionMismatch(
                f"queries must have {self.shift.shape[0] + self.dropped_features.shape[0]} features"
            )
        return (features[:, self.kept_features] - self.shift) / self.scale


def _fit_weighted(features: np.ndarray, label_weights: np.ndarray, bandwidth: float | None) -> KdeModel:
    n, d = features.shape
    if n == 0:
        raise EmptyDataset("cannot fit a density model to zero samples")
    totals = label_weights.sum(axis=1)
    mass = totals.sum()
    if mass <= 0.0:
        raise EmptyDataset("all sample weights are zero")

    mean = (totals @ features) / mass
    var = (totals @ (features - mean) ** 2) / mass
    kept = np.flatnonzero(var > 0.0)
    dropped = np.flatnonzero(var <= 0.0)
    if kept.size == 0:
        raise AllZeroVariance("every feature has zero variance")
    scale = np.sqrt(var[kept])
    points = (features[:, kept] - mean[kept]) / scale

    if bandwidth is None:
        bandwidth = float(mass) ** (-1.0 / (kept.size + 4))
    if not bandwidth > 0.0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")

    return KdeModel(
        points=points,
        label_weights=label_weights,
        label_prior=label_weights.sum(axis=0) / mass,
        bandwidth=float(bandwidth),
        shift=mean[kept],
        scale=scale,
        kept_features=kept,
        dropped_features=dropped,
    )


def fit_kde(dataset: LabeledDataset, bandwidth: float | None = None) -> KdeModel:
    """Fit per-label weighted kernel densities to a labelled dataset.

    Parameters
    ----------
    dataset : LabeledDataset
      sample_weights, when present, scale each sample's kernel and its
      share of the label prior.
    bandwidth : float, optional
      Shared kernel width in standardized units. Default is the Scott-style
      rule W ** (-1 / (d + 4)) with W the total weight.

    Returns
    -------
    KdeModel

    Raises
    ------
    EmptyDataset, AllZeroVariance, DomainError
    """
    weights = dataset.sample_weights if dataset.sample_weights is not None else np.ones(dataset.n)
    label_weights = np.zeros((dataset.n, dataset.m_s))
    label_weights[np.arange(dataset.n), dataset.selections.labels] = weights
    return _fit_weighted(dataset.features, label_weights, bandwidth)


def _posterior(
    model: KdeModel,
    queries_std: np.ndarray,
    support: np.ndarray | None = None,
    exclude_self: bool = False,
) -> np.ndarray:
    """Label posteriors for standardized queries.

    support restricts the density to a subset of training rows (the model's
    global preprocessing, bandwidth, and prior are kept). exclude_self
    removes query i's own kernel and weight, and requires the queries to be
    the training rows themselves, aligned by index.
    """
    points = model.points if support is None else model.points[support]
    weights = model.label_weights if support is None else model.label_weights[support]
    q = queries_std.shape[0]
    if exclude_self and q != points.shape[0]:
        raise DimensionMismatch("leave-one-out needs the training samples themselves as queries")

    sq = np.maximum(
        (queries_std**2).sum(axis=1)[:, None]
        + (points**2).sum(axis=1)[None, :]
        - 2.0 * (queries_std @ points.T),
        0.0,
    )
    log_kernel = -0.5 * sq / model.bandwidth**2
    if exclude_self:
        np.fill_diagonal(log_kernel, -np.inf)

    m = model.m_s
    log_density = np.full((q, m), -np.inf)
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    for s in range(m):
        total = weights[:, s].sum()
        if exclude_self:
            total = total - weights[:, s]
        else:
            total = np.full(q, total)
        has_support = total > 0.0
        if not np.any(has_support):
            continue
        raw = logsumexp(log_kernel + log_w[:, s][None, :], axis=1)
        log_density[has_support, s] = raw[has_support] - np.log(total[has_support])

    log_density = np.maximum(log_density, LOG_DENSITY_FLOOR)
    with np.errstate(divide="ignore"):
        scores = log_density + np.log(model.label_prior)[None, :]
    scores -= scores.max(axis=1, keepdims=True)
    post = np.exp(scores)
    post /= post.sum(axis=1, keepdims=True)
    return post


def predict_selection(model: KdeModel, queries: np.ndarray, loo: bool = False) -> RowStochasticMatrix:
    """Predict selection-label probabilities for query points.

    With ``loo=True`` the queries must be the model's own training samples
    in order; each sample is scored with its own kernel and weight removed
    (the global label prior is kept).

    Every row sums to 1 and every label with positive prior mass keeps a
    strictly positive entry; queries far from all training data flatten to
    the label prior through the log-density floor.
    """
    queries_std = model.transform(queries)
    post = _posterior(model, queries_std, exclude_self=loo)
    return validate_stochastic(post, tol=1e-9)


def cross_predict(
    dataset: LabeledDataset,
    folds: int = 5,
    bandwidth: float | None = None,
    seed: int = 0,
) -> RowStochasticMatrix:
    """Out-of-fold selection probabilities for every training sample.

    Standardization, bandwidth, and label prior are computed once from the
    full dataset; each fold's rows are then scored against the kernels of
    the remaining folds, so ``folds == n`` coincides with leave-one-out
    prediction on the full fit.

    Warns
    -----
    FoldTooSmall
      When removing a fold leaves some label with zero weight; that fold's
      rows fall back to the label prior.
    """
    if not 2 <= folds <= dataset.n:
        raise DomainError(f"folds must lie in [2, {dataset.n}], got {folds}")
    model = fit_kde(dataset, bandwidth)
    if folds == dataset.n:
        return predict_selection(model, dataset.features, loo=True)

    queries_std = model.points
    order = substream(seed, "folds").permutation(dataset.n)
    out = np.empty((dataset.n, model.m_s))
    represented = model.label_prior > 0.0
    for part in np.array_split(order, folds):
        support = np.setdiff1d(np.arange(dataset.n), part)
        fold_mass = model.label_weights[support].sum(axis=0)
        if np.any(represented & (fold_mass <= 0.0)):
            missing = int(np.argmax(represented & (fold_mass <= 0.0)))
            warnings.warn(
                f"a fold lost all weight for label {missing}; its rows fall back to the label prior",
                FoldTooSmall,
                stacklevel=2,
            )
            out[part] = model.label_prior
            continue
        out[part] = _posterior(model, queries_std[part], support=support)
    return validate_stochastic(out, tol=1e-9)


def ingest_predictions(path: str | os.PathLike, expected_labels: int | None = None) -> RowStochasticMatrix:
    """Read an externally produced S_hat matrix CSV and validate it."""
    matrix = read_matrix_csv(path, expected_cols=expected_labels)
    return validate_stochastic(matrix, tol=1e-6)


class KdeClassifier:
    """Soft-target adapter so the kernel classifier can drive iterative
    refinement: fitting to an (n, m) target matrix treats each column as
    per-sample weights of that class's density."""

    def __init__(self, bandwidth: float | None = None):
        self.bandwidth = bandwidth
        self.model: KdeModel | None = None

    def fit_soft(self, features: np.ndarray, targets: np.ndarray) -> "KdeClassifier":
        targets = np.asarray(targets, dtype=np.float64)
        if targets.ndim != 2 or targets.shape[0] != np.asarray(features).shape[0]:
            raise DimensionMismatch("targets must be (n, m) aligned with features")
        if np.any(targets < 0):
            raise DomainError("targets must be nonnegative")
        self.model = _fit_weighted(np.asarray(features, dtype=np.float64), targets, self.bandwidth)
        return self

    def predict_proba(self, features: np.ndarray, loo: bool = False) -> np.ndarray:
        if self.model is None:
            raise EmptyDataset("classifier is not fitted")
        return predict_selection(self.model, features, loo=loo).data
