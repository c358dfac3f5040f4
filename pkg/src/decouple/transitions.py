"""Transition-matrix templates and Bayes conversions.

A transition matrix T (m_y x m_s) gives p(s|y) for each class row; its
Bayes counterpart Upsilon (m_s x m_y) gives p(y|s) for each label row.
Templates cover the standard labelling regimes (supervised, positive vs
unlabelled, semi-supervised with or without a negative class, multiple
positive classes, label noise); each template also carries a Dirichlet
pseudo-count matrix A that anchors which transitions are possible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import RowStochasticMatrix, _validate_prior_vector, validate_stochastic
from .errors import (
    ClassCountMismatch,
    DimensionMismatch,
    InconsistentSpec,
    ZeroClassMass,
    ZeroLabelMass,
)

# Pseudo-count placed on every structurally possible transition so the prior
# stays proper even where the template itself puts zero rate.
TEMPLATE_EPSILON = 1e-3


class TransitionKind(str, enum.Enum):
    SUPERVISED = "supervised"
    POSITIVE_UNLABELLED = "positive-unlabelled"
    SEMI_SUPERVISED = "semi-supervised"
    SEMI_SUPERVISED_WITH_NEGATIVE = "semi-supervised-with-negative"
    MULTI_POSITIVE_WITH_NEGATIVE = "multi-positive-with-negative"
    MULTI_POSITIVE_NOISY = "multi-positive-noisy"
    CUSTOM = "custom"


@dataclass(frozen=True)
class TransitionSpec:
    """Parameters of a labelling regime.

    label_rate is the fraction of each positive class that receives its own
    label; noise_rate is the fraction of labelled samples whose label flips
    uniformly onto one of the other positive labels (never onto
    "unlabelled"); prior_strength scales the Dirichlet pseudo-counts.
    For kind="custom", ``matrix`` supplies the transition rows directly.
    """

    kind: TransitionKind
    m_y: int
    m_s: int
    label_rate: float = 0.1
    noise_rate: float = 0.0
    prior_strength: float = 10.0
    matrix: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TransitionKind(self.kind))
        if self.m_y < 1 or self.m_s < 1:
            raise InconsistentSpec(f"m_y={self.m_y}, m_s={self.m_s} must be positive")
        if not 0.0 <= self.label_rate <= 1.0:
            raise InconsistentSpec(f"label_rate={self.label_rate} outside [0, 1]")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise InconsistentSpec(f"noise_rate={self.noise_rate} outside [0, 1]")
        if self.prior_strength < 0:
            raise InconsistentSpec(f"prior_strength={self.prior_strength} must be nonnegative")
        if self.matrix is not None and self.kind is not TransitionKind.CUSTOM:
            raise InconsistentSpec("an explicit matrix is only valid with kind='custom'")
        if self.matrix is None and self.kind is TransitionKind.CUSTOM:
            raise InconsistentSpec("kind='custom' requires an explicit matrix")


def _positive_block(k: int, m_s: int, rate: float, noise: float) -> np.ndarray:
    """Rows for k positive classes over k own labels plus a final
    "unlabelled" column at index m_s - 1."""
    block = np.zeros((k, m_s))
    for y in range(k):
        block[y, y] = rate * (1.0 - noise)
        if noise > 0.0:
            block[y, :k] += rate * noise / (k - 1)
            block[y, y] -= rate * noise / (k - 1)
        block[y, m_s - 1] = 1.0 - rate
    return block


def build_template(spec: TransitionSpec) -> tuple[RowStochasticMatrix, np.ndarray]:
    """Construct the transition matrix and Dirichlet pseudo-counts for a spec.

    Returns
    -------
    (T, A)
      T is the template transition matrix (m_y x m_s). A has
      ``prior_strength * T + epsilon`` on structurally possible entries
      (those the template itself gives positive rate) and exact zeros on
      impossible ones, so downstream inference preserves the zeros.

    Raises
    ------
    InconsistentSpec
      If the spec's dimensions or rates contradict the kind.
    """
    kind, m_y, m_s = spec.kind, spec.m_y, spec.m_s
    rate, noise = spec.label_rate, spec.noise_rate

    if kind is TransitionKind.SUPERVISED:
        if m_y != m_s:
            raise InconsistentSpec(f"supervised requires m_y == m_s, got {m_y} x {m_s}")
        if noise != 0.0:
            raise InconsistentSpec("supervised template has no noise parameter")
        t = np.eye(m_y)
    elif kind is TransitionKind.POSITIVE_UNLABELLED:
        if m_y != 2 or m_s != 2:
            raise InconsistentSpec(f"positive-unlabelled requires 2 x 2, got {m_y} x {m_s}")
        if noise != 0.0:
            raise InconsistentSpec("positive-unlabelled template has no noise parameter")
        t = np.array([[rate, 1.0 - rate], [0.0, 1.0]])
    elif kind is TransitionKind.SEMI_SUPERVISED:
        if m_s != m_y + 1:
            raise InconsistentSpec(f"semi-supervised requires m_s == m_y + 1, got {m_y} x {m_s}")
        if noise > 0.0 and m_y < 2:
            raise InconsistentSpec("label noise needs at least two positive classes")
        t = _positive_block(m_y, m_s, rate, noise)
    elif kind in (
        TransitionKind.SEMI_SUPERVISED_WITH_NEGATIVE,
        TransitionKind.MULTI_POSITIVE_WITH_NEGATIVE,
        TransitionKind.MULTI_POSITIVE_NOISY,
    ):
        if m_y != m_s:
            raise InconsistentSpec(f"{kind.value} requires m_y == m_s, got {m_y} x {m_s}")
        if m_y < 2:
            raise InconsistentSpec(f"{kind.value} needs at least one positive class plus negative")
        k = m_y - 1
        if noise > 0.0 and k < 2:
            raise InconsistentSpec("label noise needs at least two positive classes")
        t = np.zeros((m_y, m_s))
        t[:k] = _positive_block(k, m_s, rate, noise)
        t[k, m_s - 1] = 1.0
    elif kind is TransitionKind.CUSTOM:
        t = np.asarray(spec.matrix, dtype=np.float64)
        if t.shape != (m_y, m_s):
            raise InconsistentSpec(f"custom matrix has shape {t.shape}, spec says {m_y} x {m_s}")
        t = validate_stochastic(t, tol=1e-6).data
    else:  # pragma: no cover
        raise InconsistentSpec(f"unknown kind {kind!r}")

    transition = validate_stochastic(t, tol=1e-9)
    possible = transition.data > 0.0
    dirichlet = spec.prior_strength * transition.data + TEMPLATE_EPSILON * possible
    return transition, dirichlet


def t_to_upsilon(transition: RowStochasticMatrix, class_prior) -> RowStochasticMatrix:
    """Convert p(s|y) rows to p(y|s) rows through Bayes' rule.

    Upsilon[s, y] = T[y, s] p(y) / sum_y' T[y', s] p(y').

    Raises
    ------
    ZeroLabelMass
      If some label has zero marginal probability under the prior, making
      its posterior row undefined.
    """
    prior = _validate_prior_vector(class_prior, "class_prior")
    if prior.shape[0] != transition.rows:
        raise DimensionMismatch(
            f"class_prior has {prior.shape[0]} entries but T has {transition.rows} rows"
        )
    joint = transition.data * prior[:, None]
    label_mass = joint.sum(axis=0)
    if np.any(label_mass == 0.0):
        s = int(np.argmax(label_mass == 0.0))
        raise ZeroLabelMass(f"label {s} has zero marginal probability under this prior")
    return validate_stochastic(joint.T / label_mass[:, None], tol=1e-9)


def upsilon_to_t(upsilon: RowStochasticMatrix, label_prior) -> RowStochasticMatrix:
    """Convert p(y|s) rows back to p(s|y) rows through Bayes' rule.

    T[y, s] = Upsilon[s, y] p(s) / sum_s' Upsilon[s', y] p(s').

    Raises
    ------
    ZeroClassMass
      If some class has zero marginal probability under the prior.
    """
    prior = _validate_prior_vector(label_prior, "label_prior")
    if prior.shape[0] != upsilon.rows:
        raise DimensionMismatch(
            f"label_prior has {prior.shape[0]} entries but Upsilon has {upsilon.rows} rows"
        )
    joint = upsilon.data * prior[:, None]
    class_mass = joint.sum(axis=0)
    if np.any(class_mass == 0.0):
        y = int(np.argmax(class_mass == 0.0))
        raise ZeroClassMass(f"class {y} has zero marginal probability under this prior")
    return validate_stochastic(joint.T / class_mass[:, None], tol=1e-9)


def compose_integration(blocks) -> tuple[RowStochasticMatrix, np.ndarray]:
    """Stack per-dataset Upsilon blocks into one labelling scheme.

    Parameters
    ----------
    blocks : sequence of (upsilon, mass) or (upsilon, mass, label_masses)
      ``upsilon`` holds one p(y|s) row per label the dataset provides
      (RowStochasticMatrix or array), ``mass`` is the dataset's share of
      the combined data, and optional ``label_masses`` split that share
      over the block's labels (uniform split when omitted).

    Returns
    -------
    (upsilon, label_prior)
      The stacked conversion matrix and the matching label prior; the
      prior sums to 1 across all stacked labels.

    Raises
    ------
    ClassCountMismatch
      If blocks disagree on the number of classes.
    InconsistentSpec
      If masses are not positive or label masses are degenerate.
    """
    if not blocks:
        raise InconsistentSpec("at least one block is required")
    parts = []
    masses = []
    m_y = None
    for b, block in enumerate(blocks):
        if len(block) == 2:
            upsilon, mass = block
            label_masses = None
        elif len(block) == 3:
            upsilon, mass, label_masses = block
        else:
            raise InconsistentSpec(f"block {b}: expected (upsilon, mass[, label_masses])")
        if not isinstance(upsilon, RowStochasticMatrix):
            upsilon = validate_stochastic(upsilon, tol=1e-6)
        if m_y is None:
            m_y = upsilon.cols
        elif upsilon.cols != m_y:
            raise ClassCountMismatch(f"block {b} has {upsilon.cols} classes, expected {m_y}")
        if not mass > 0.0:
            raise InconsistentSpec(f"block {b}: mass must be positive, got {mass}")
        if label_masses is None:
            shares = np.full(upsilon.rows, 1.0 / upsilon.rows)
        else:
            shares = np.asarray(label_masses, dtype=np.float64)
            if shares.shape != (upsilon.rows,):
                raise DimensionMismatch(
                    f"block {b}: {shares.shape[0] if shares.ndim == 1 else shares.shape} label masses "
                    f"for {upsilon.rows} labels"
                )
            if np.any(shares < 0) or shares.sum() <= 0:
                raise InconsistentSpec(f"block {b}: label masses must be nonnegative with positive sum")
            shares = shares / shares.sum()
        parts.append(upsilon.data)
        masses.append(mass * shares)
    stacked = validate_stochastic(np.vstack(parts), tol=1e-9)
    prior = np.concatenate(masses)
    prior = prior / prior.sum()
    return stacked, prior
