"""Core probability-matrix types.

Selection labels live in rows of S (n x m_s), class memberships in rows of
Y (n x m_y), and a transition matrix T (m_y x m_s) couples them through the
forward model S = Y T. All three are row-stochastic; observed labels are the
one-hot special case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    LengthMismatch,
    NegativeEntry,
    ParseError,
    RowSumViolation,
)

# Rows whose sums are already this close to 1 are kept bit-for-bit; only
# genuinely off rows get divided. Keeps validation idempotent.
_EXACT_SLACK = 1e-13


def validate_stochastic(matrix, tol: float = 1e-9) -> "RowStochasticMatrix":
    """Validate a nonnegative matrix with unit row sums and wrap it.

    Parameters
    ----------
    matrix : array-like, shape (n, m)
      Candidate row-stochastic matrix.
    tol : float
      Acceptance tolerance. Entries below ``-tol`` raise, entries in
      ``[-tol, 0)`` are clamped to 0, and rows whose sum is within ``tol``
      of 1 are renormalized; anything further off raises.

    Returns
    -------
    RowStochasticMatrix

    Raises
    ------
    NegativeEntry, RowSumViolation, DimensionMismatch
    """
    data = np.array(matrix, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
        raise DimensionMismatch(f"expected a nonempty 2-d matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ParseError("matrix contains non-finite entries")
    if np.any(data < -tol):
        i, j = np.argwhere(data < -tol)[0]
        raise NegativeEntry(f"entry ({i}, {j}) = {data[i, j]:.6g} is negative beyond tol={tol:g}")
    np.clip(data, 0.0, None, out=data)
    sums = data.sum(axis=1)
    off = np.abs(sums - 1.0)
    if np.any(off > tol):
        i = int(np.argmax(off))
        raise RowSumViolation(f"row {i} sums to {sums[i]:.12g}, outside tol={tol:g} of 1")
    needs = off > _EXACT_SLACK
    if np.any(needs):
        data[needs] /= sums[needs, None]
    return RowStochasticMatrix(data)


@dataclass(frozen=True, eq=False)
class RowStochasticMatrix:
    """A validated nonnegative matrix whose rows sum to one."""

    data: np.ndarray

    def __post_init__(self):
        self.data.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __repr__(self) -> str:
        return f"RowStochasticMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True, eq=False)
class OneHotMatrix:
    """Hard label assignments: one unit entry per row.

    ``labels[i]`` is the column index of row i's single 1. Converts to and
    from the dense row-stochastic form losslessly.
    """

    labels: np.ndarray
    cols: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1:
            raise DimensionMismatch(f"labels must be 1-d, got shape {labels.shape}")
        if self.cols < 1:
            raise DimensionMismatch("cols must be at least 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.cols):
            raise DimensionMismatch(f"label indices must lie in [0, {self.cols})")
        labels.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def data(self) -> np.ndarray:
        dense = np.zeros((self.rows, self.cols))
        dense[np.arange(self.rows), self.labels] = 1.0
        return dense

    def to_stochastic(self) -> RowStochasticMatrix:
        return RowStochasticMatrix(self.data)

    @classmethod
    def from_dense(cls, matrix) -> "OneHotMatrix":
        dense = np.asarray(matrix, dtype=np.float64)
        if dense.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d matrix, got shape {dense.shape}")
        labels = dense.argmax(axis=1)
        expect = np.zeros_like(dense)
        expect[np.arange(dense.shape[0]), labels] = 1.0
        if not np.array_equal(dense, expect):
            raise ParseError("matrix is not one-hot: each row must be a single 1 among 0s")
        return cls(labels=labels, cols=dense.shape[1])

    def __repr__(self) -> str:
        return f"OneHotMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Samples with observed selection labels.

    features : (n, d) reals
    selections : OneHotMatrix with n rows, or None for a dataset that has
        not been labelled yet
    true_classes : optional (n,) ground-truth class indices, simulation only
    sample_weights : optional (n,) nonnegative per-sample weights
    """

    features: np.ndarray
    selections: OneHotMatrix | None
    true_classes: np.ndarray | None = None
    sample_weights: np.ndarray | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise DimensionMismatch(f"features must be 2-d, got shape {features.shape}")
        object.__setattr__(self, "features", features)
        if not np.all(np.isfinite(features)):
            raise ParseError("features contain non-finite values")
        if self.selections is not None and self.selections.rows != features.shape[0]:
            raise LengthMismatch(
                f"{features.shape[0]} feature rows but {self.selections.rows} selection rows"
            )
        if self.true_classes is not None:
            classes = np.asarray(self.true_classes, dtype=np.int64)
            if classes.shape != (features.shape[0],):
                raise LengthMismatch(
                    f"true_classes has shape {classes.shape}, expected ({features.shape[0]},)"
                )
            if classes.size and classes.min() < 0:
                raise NegativeEntry("true_classes contains a negative index")
            object.__setattr__(self, "true_classes", classes)
        if self.sample_weights is not None:
            weights = np.asarray(self.sample_weights, dtype=np.float64)
            if weights.shape != (features.shape[0],):
                raise LengthMismatch(
                    f"sample_weights has shape {weights.shape}, expected ({features.shape[0]},)"
                )
            if not np.all(np.isfinite(weights)):
                raise ParseError("sample_weights contain non-finite values")
            if np.any(weights < 0):
                raise NegativeEntry("sample_weights must be nonnegative")
            object.__setattr__(self, "sample_weights", weights)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def m_s(self) -> int:
        if self.selections is None:
            raise DimensionMismatch("dataset carries no selection labels")
        return self.selections.cols

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices)
        return LabeledDataset(
            features=self.features[idx],
            selections=None
            if self.selections is None
            else OneHotMatrix(labels=self.selections.labels[idx], cols=self.selections.cols),
            true_classes=None if self.true_classes is None else self.true_classes[idx],
            sample_weights=None if self.sample_weights is None else self.sample_weights[idx],
        )


def _validate_prior_vector(vector, name: str) -> np.ndarray:
    vec = np.asarray(vector, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise DimensionMismatch(f"{name} must be a nonempty vector")
    validated = validate_stochastic(vec[None, :], tol=1e-9)
    return validated.data[0]


@dataclass(frozen=True, eq=False)
class Prior:
    """Prior knowledge for inference: p(y), optionally p(s) and a Dirichlet
    pseudo-count matrix over transition rows."""

    class_prior: np.ndarray
    label_prior: np.ndarray | None = None
    dirichlet: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "class_prior", _validate_prior_vector(self.class_prior, "class_prior"))
        if self.label_prior is not None:
            object.__setattr__(self, "label_prior", _validate_prior_vector(self.label_prior, "label_prior"))
        if self.dirichlet is not None:
            a = np.asarray(self.dirichlet, dtype=np.float64)
            if a.ndim != 2:
                raise DimensionMismatch(f"dirichlet must be 2-d, got shape {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ParseError("dirichlet contains non-finite entries")
            if np.any(a < 0):
                raise NegativeEntry("dirichlet pseudo-counts must be nonnegative")
            if a.shape[0] != self.class_prior.shape[0]:
                raise DimensionMismatch(
                    f"dirichlet has {a.shape[0]} rows but class_prior has {self.class_prior.shape[0]} entries"
                )
            if self.label_prior is not None and a.shape[1] != self.label_prior.shape[0]:
                raise DimensionMismatch(
                    f"dirichlet has {a.shape[1]} cols but label_prior has {self.label_prior.shape[0]} entries"
                )
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, "dirichlet", a)

    @property
    def m_y(self) -> int:
        return self.class_prior.shape[0]


def forward_selection(class_memberships: RowStochasticMatrix, transition: RowStochasticMatrix) -> RowStochasticMatrix:
    """Apply the forward model S = Y T.

    Parameters
    ----------
    class_memberships : RowStochasticMatrix, shape (n, m_y)
    transition : RowStochasticMatrix, shape (m_y, m_s)

    Returns
    -------
    RowStochasticMatrix, shape (n, m_s)
      Selection probabilities implied by the class memberships.
    """
    if class_memberships.cols != transition.rows:
        raise DimensionMismatch(
            f"Y has {class_memberships.cols} columns but T has {transition.rows} rows"
        )
    return validate_stochastic(class_memberships.data @ transition.data, tol=1e-9)
