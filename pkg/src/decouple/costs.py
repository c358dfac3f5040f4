"""Cost-sensitive weighting of selection labels.

The cost of acting as if a sample carried label s' when it carries label s
is the expected disagreement of the two class posteriors:

    C[s, s'] = sum_y (1 - Upsilon[s', y]) Upsilon[s, y],

i.e. C = Upsilon (1 - Upsilon)'. Sample weights summarize, per label, how
much worse the other labels would be on average.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import LabeledDataset, RowStochasticMatrix, _validate_prior_vector
from .errors import DegeneratePrior, DimensionMismatch, DomainError

WEIGHT_MODES = ("expected-increase", "simple")


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Pairwise label-confusion costs; entries lie in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        self.data.setflags(write=False)

    @property
    def size(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        return f"CostMatrix({self.size}x{self.size})"


def cost_matrix(upsilon: RowStochasticMatrix) -> CostMatrix:
    """Pairwise costs C = Upsilon (1 - Upsilon)' from the label-to-class rows."""
    u = upsilon.data
    c = u @ (1.0 - u).T
    np.clip(c, 0.0, 1.0, out=c)
    return CostMatrix(c)


def sample_weights(
    costs: CostMatrix,
    label_prior,
    mode: str = "expected-increase",
    normalize: bool = False,
) -> np.ndarray:
    """Per-label training weights from the cost matrix.

    Parameters
    ----------
    costs : CostMatrix
    label_prior : vector of label marginals p(s)
    mode : str
      "expected-increase" (default): w_s is the prior-weighted average of
      C[s, s'] - C[s, s] over the other labels s', with the prior
      renormalized over s' != s and the result clamped at 0.
      "simple": w_s = sum_s' p(s') C[s, s'].
    normalize : bool
      Rescale the weights to mean 1 (when their mean is positive).

    Warns
    -----
    DegeneratePrior
      When all prior mass sits on label s itself, leaving no other label
      to compare against; that label's weight falls back to 0.
    """
    prior = _validate_prior_vector(label_prior, "label_prior")
    m = costs.size
    if prior.shape[0] != m:
        raise DimensionMismatch(f"label_prior has {prior.shape[0]} entries but costs are {m}x{m}")
    if mode not in WEIGHT_MODES:
        raise DomainError(f"mode must be one of {WEIGHT_MODES}, got {mode!r}")

    c = costs.data
    if mode == "simple":
        weights = c @ prior
    else:
        weights = np.zeros(m)
        for s in range(m):
            rest = prior.copy()
            rest[s] = 0.0
            total = rest.sum()
            if total == 0.0:
                if m > 1:
                    warnings.warn(
                        f"label prior puts all mass on label {s}; its weight falls back to 0",
                        DegeneratePrior,
                        stacklevel=2,
                    )
                continue
            rest /= total
            weights[s] = max(0.0, float(rest @ (c[s] - c[s, s])))
    if normalize:
        mean = weights.mean()
        if mean > 0.0:
            weights = weights / mean
    return weights


def attach_weights(dataset: LabeledDataset, label_weights) -> LabeledDataset:
    """Return a copy of the dataset carrying per-sample weights looked up by
    each sample's selection label."""
    w = np.asarray(label_weights, dtype=np.float64)
    if w.shape != (dataset.m_s,):
        raise DimensionMismatch(f"expected {dataset.m_s} label weights, got shape {w.shape}")
    return LabeledDataset(
        features=dataset.features,
        selections=dataset.selections,
        true_classes=dataset.true_classes,
        sample_weights=w[dataset.selections.labels],
    )
