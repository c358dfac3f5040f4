"""MAP inference of class densities and transitions from selection estimates.

Given per-sample selection probabilities S_hat (n x m_s), a class prior
p(y), and Dirichlet pseudo-counts A over transition rows, the objective

    O(Y, T) = -KL(S_hat, Y T) + sum_iy Y_iy log p(y) + sum_ys A_ys log T_ys

is maximized over row-stochastic Y (n x m_y) and T (m_y x m_s) by an
alternating scheme: exponentiated-gradient ascent with backtracking on the
rows of Y, and a closed-form update T propto (expected transition mass + A)
for T. Entries of A that are exactly zero pin the matching T entries to
zero throughout.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .core import (
    LabeledDataset,
    OneHotMatrix,
    Prior,
    RowStochasticMatrix,
    validate_stochastic,
)
from .errors import (
    DimensionMismatch,
    DomainError,
    EmptyClass,
    NoProgress,
    ZeroPosterior,
)
from .io import write_matrix_csv

_MAX_HALVINGS = 20


@dataclass(frozen=True)
class InferenceConfig:
    """Optimizer settings shared by the inference tasks."""

    max_iters: int = 2000
    step_size: float = 1.0
    backtrack_factor: float = 0.5
    objective_tol: float = 1e-8
    floor: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be at least 1, got {self.max_iters}")
        if not self.step_size > 0:
            raise DomainError(f"step_size must be positive, got {self.step_size}")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise DomainError(f"backtrack_factor must lie in (0, 1), got {self.backtrack_factor}")
        if self.objective_tol < 0:
            raise DomainError(f"objective_tol must be nonnegative, got {self.objective_tol}")
        if not 0.0 < self.floor <= 1e-3:
            raise DomainError(f"floor must lie in (0, 1e-3], got {self.floor}")


@dataclass(frozen=True, eq=False)
class InferenceResult:
    """Outcome of a joint or iterative inference run."""

    y_hat: RowStochasticMatrix
    t_hat: RowStochasticMatrix
    objective_trace: np.ndarray
    converged: bool
    iterations: int
    w_hat: RowStochasticMatrix | None = None

    def export(self, out_dir: str | os.PathLike) -> list[str]:
        """Write y_hat.csv, t_hat.csv, optional w_hat.csv, and metadata.json."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        write_matrix_csv(out / "y_hat.csv", self.y_hat.data, header="class memberships")
        written.append(str(out / "y_hat.csv"))
        write_matrix_csv(out / "t_hat.csv", self.t_hat.data, header="transition matrix")
        written.append(str(out / "t_hat.csv"))
        if self.w_hat is not None:
            write_matrix_csv(out / "w_hat.csv", self.w_hat.data, header="corrected labels")
            written.append(str(out / "w_hat.csv"))
        meta = {
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "final_objective": float(self.objective_trace[-1]),
            "objective_trace": [float(v) for v in self.objective_trace],
        }
        meta_path = out / "metadata.json"
        meta_path.write_text(json.dumps(meta, indent=2) + "\n")
        written.append(str(meta_path))
        return written


def _check_dims(s_hat: RowStochasticMatrix, m_y: int, m_s: int) -> None:
    if s_hat.cols != m_s:
        raise DimensionMismatch(f"S_hat has {s_hat.cols} labels but T has {m_s} columns")


def _log_prior(class_prior: np.ndarray) -> np.ndarray:
    if np.any(class_prior <= 0.0):
        raise DomainError("class prior must be strictly positive for inference")
    return np.log(class_prior)


def objective(s_hat: RowStochasticMatrix, y: RowStochasticMatrix, t: RowStochasticMatrix, prior: Prior) -> float:
    """Evaluate the MAP objective at (Y, T).

    Zero entries of S_hat and zero pseudo-counts contribute nothing
    (0 log 0 = 0 convention); a zero model probability under positive
    S_hat mass, or a zero transition under a positive pseudo-count, is a
    DomainError.
    """
    if y.rows != s_hat.rows:
        raise DimensionMismatch(f"Y has {y.rows} rows but S_hat has {s_hat.rows}")
    if y.cols != t.rows:
        raise DimensionMismatch(f"Y has {y.cols} columns but T has {t.rows} rows")
    _check_dims(s_hat, t.rows, t.cols)
    if prior.m_y != t.rows:
        raise DimensionMismatch(f"class_prior covers {prior.m_y} classes but T has {t.rows} rows")
    log_py = _log_prior(prior.class_prior)

    product = y.data @ t.data
    support = s_hat.data > 0.0
    if np.any(product[support] == 0.0):
        raise DomainError("model assigns zero probability to a label with positive S_hat mass")
    s_vals = s_hat.data[support]
    kl = float(np.sum(s_vals * (np.log(s_vals) - np.log(product[support]))))

    prior_term = float(y.data.sum(axis=0) @ log_py)

    a_term = 0.0
    if prior.dirichlet is not None:
        a = prior.dirichlet
        if a.shape != (t.rows, t.cols):
            raise DimensionMismatch(f"dirichlet has shape {a.shape}, expected {(t.rows, t.cols)}")
        amask = a > 0.0
        if np.any(t.data[amask] == 0.0):
            raise DomainError("T is zero where the Dirichlet prior has positive pseudo-count")
        a_term = float(np.sum(a[amask] * np.log(t.data[amask])))

    return -kl + prior_term + a_term


def _objective_parts(s, y, t, log_py, a, floor):
    """Internal objective with floored logs; equals the public value whenever
    no probability actually falls below the floor."""
    product = y @ t
    log_p = np.log(np.maximum(product, floor))
    ll = float(np.sum(s * log_p, where=s > 0.0))
    prior_term = float(y.sum(axis=0) @ log_py)
    a_term = 0.0
    if a is not None:
        amask = a > 0.0
        if np.any(amask):
            a_term = float(np.sum(a[amask] * np.log(np.maximum(t[amask], floor))))
    return ll + prior_term + a_term, product


def _entropy(s: np.ndarray) -> float:
    vals = s[s > 0.0]
    return float(np.sum(vals * np.log(vals)))


def _normalize_rows(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Renormalize rows to unit sum; rows already summing to 1 are kept
    bit-for-bit so fixed points stay exact. All-zero rows are flagged."""
    sums = matrix.sum(axis=1)
    ok = sums > 0.0
    out = matrix.copy()
    needs = ok & (np.abs(sums - 1.0) > 1e-13)
    if np.any(needs):
        out[needs] /= sums[needs, None]
    return out, ok


def _y_gradient(s, product, t, log_py, floor):
    ratio = np.zeros_like(s)
    np.divide(s, np.maximum(product, floor), out=ratio, where=s > 0.0)
    return ratio @ t.T + log_py[None, :]


def _init_from_prior(s_hat: np.ndarray, t0: np.ndarray, class_prior: np.ndarray) -> np.ndarray:
    """One Bayes pass of S_hat through the prior-mean transition."""
    joint = t0 * class_prior[:, None]
    mass = joint.sum(axis=0)
    upsilon = np.empty((t0.shape[1], t0.shape[0]))
    reachable = mass > 0.0
    upsilon[reachable] = (joint[:, reachable] / mass[reachable]).T
    upsilon[~reachable] = 1.0 / t0.shape[0]
    return s_hat @ upsilon


def infer_joint(s_hat: RowStochasticMatrix, prior: Prior, config: InferenceConfig = InferenceConfig()) -> InferenceResult:
    """Jointly estimate class memberships Y_hat and the transition T_hat.

    Parameters
    ----------
    s_hat : RowStochasticMatrix, shape (n, m_s)
      Per-sample selection probability estimates.
    prior : Prior
      class_prior must be strictly positive; dirichlet (m_y x m_s) supplies
      the pseudo-counts A. A missing dirichlet means a flat zero prior on T.
    config : InferenceConfig

    Returns
    -------
    InferenceResult
      objective_trace[0] is the objective at the initial point and one entry
      is appended per accepted iteration, so the trace is non-decreasing.

    Raises
    ------
    DomainError
      If S_hat puts mass on a label no class can reach under the prior's
      zero structure, or the class prior has a zero entry.
    NoProgress
      If no ascent step is found at the first iteration.
    """
    log_py = _log_prior(prior.class_prior)
    m_y = prior.m_y
    m_s = s_hat.cols
    n = s_hat.rows
    s = s_hat.data

    a = prior.dirichlet
    if a is not None and a.shape != (m_y, m_s):
        raise DimensionMismatch(f"dirichlet has shape {a.shape}, expected {(m_y, m_s)}")

    if a is not None:
        free_rows = ~np.any(a > 0.0, axis=1)
        reachable = np.any(a > 0.0, axis=0) | np.any(free_rows)
        has_mass = s.sum(axis=0) > 0.0
        if np.any(has_mass & ~reachable):
            bad = int(np.argmax(has_mass & ~reachable))
            raise DomainError(
                f"S_hat puts mass on label {bad}, which no class can reach under the prior"
            )
        t0, rows_ok = _normalize_rows(a.astype(np.float64))
        t0[~rows_ok] = 1.0 / m_s
    else:
        t0 = np.full((m_y, m_s), 1.0 / m_s)

    y = _init_from_prior(s, t0, prior.class_prior)
    t = t0
    floor = config.floor
    entropy = _entropy(s)

    current, product = _objective_parts(s, y, t, log_py, a, floor)
    trace = [current - entropy]
    converged = False
    iterations = 0
    eta = config.step_size

    for iteration in range(1, config.max_iters + 1):
        previous = current

        # Y step: multiplicative ascent on each row with backtracking.
        grad = _y_gradient(s, product, t, log_py, floor)
        grad_centred = grad - grad.max(axis=1, keepdims=True)
        accepted = False
        for _ in range(_MAX_HALVINGS + 1):
            candidate, rows_ok = _normalize_rows(y * np.exp(eta * grad_centred))
            if np.all(rows_ok):
                value, cand_product = _objective_parts(s, candidate, t, log_py, a, floor)
                if value >= current:
                    y, current, product = candidate, value, cand_product
                    accepted = True
                    eta = min(eta * 2.0, config.step_size * 2.0**_MAX_HALVINGS)
                    break
            eta *= config.backtrack_factor
        if not accepted and iteration == 1:
            raise NoProgress("no ascent step found for Y at the first iteration")

        # T step: closed-form update from expected transition mass plus A.
        ratio = np.zeros_like(s)
        np.divide(s, np.maximum(product, floor), out=ratio, where=s > 0.0)
        mass = t * (y.T @ ratio)
        counts = mass if a is None else mass + a
        t_candidate, rows_ok = _normalize_rows(counts)
        t_candidate[~rows_ok] = t[~rows_ok]
        value, cand_product = _objective_parts(s, y, t_candidate, log_py, a, floor)
        if value >= current:
            t, current, product = t_candidate, value, cand_product

        iterations = iteration
        trace.append(current - entropy)
        if current - previous <= config.objective_tol * (1.0 + abs(previous)):
            converged = True
            break

    return InferenceResult(
        y_hat=validate_stochastic(y, tol=1e-6),
        t_hat=validate_stochastic(t, tol=1e-6),
        objective_trace=np.asarray(trace),
        converged=converged,
        iterations=iterations,
    )


def infer_y_given_t(
    s_hat: RowStochasticMatrix,
    transition: RowStochasticMatrix,
    class_prior,
    config: InferenceConfig = InferenceConfig(),
) -> RowStochasticMatrix:
    """Estimate class memberships with the transition matrix held fixed.

    Rows are independent, so each row runs its own backtracked
    exponentiated-gradient ascent; a row stops once its objective gain
    falls below objective_tol.

    In the positive-vs-unlabelled special case T = [[rho, 1-rho], [0, 1]]
    with a uniform class prior this reproduces the classic correction
    p(y=1|x) = p(s=1|x) / rho, and rows whose selection probability
    exceeds rho clamp to (1, 0).
    """
    prior = np.asarray(class_prior, dtype=np.float64)
    if prior.ndim != 1 or prior.shape[0] != transition.rows:
        raise DimensionMismatch(
            f"class_prior must have {transition.rows} entries, got shape {prior.shape}"
        )
    prior = prior / prior.sum() if prior.sum() > 0 else prior
    log_py = _log_prior(prior)
    _check_dims(s_hat, transition.rows, transition.cols)

    s = s_hat.data
    t = transition.data
    unreachable = t.sum(axis=0) == 0.0
    if np.any(unreachable & (s.sum(axis=0) > 0.0)):
        bad = int(np.argmax(unreachable & (s.sum(axis=0) > 0.0)))
        raise DomainError(f"S_hat puts mass on label {bad}, which no class can reach")

    floor = config.floor
    y = _init_from_prior(s, t, prior)

    def row_values(y_mat):
        product = y_mat @ t
        log_p = np.log(np.maximum(product, floor))
        return np.sum(s * log_p, where=s > 0.0, axis=1) + y_mat @ log_py, product

    values, product = row_values(y)
    eta = np.full(s.shape[0], config.step_size)
    active = np.ones(s.shape[0], dtype=bool)

    for _ in range(config.max_iters):
        if not np.any(active):
            break
        grad = _y_gradient(s, product, t, log_py, floor)
        grad -= grad.max(axis=1, keepdims=True)
        pending = active.copy()
        improved = np.zeros_like(active)
        for _ in range(_MAX_HALVINGS + 1):
            if not np.any(pending):
                break
            candidate, rows_ok = _normalize_rows(y[pending] * np.exp(eta[pending, None] * grad[pending]))
            sub_product = candidate @ t
            log_p = np.log(np.maximum(sub_product, floor))
            cand_values = np.where(
                rows_ok,
                np.sum(s[pending] * log_p, where=s[pending] > 0.0, axis=1) + candidate @ log_py,
                -np.inf,
            )
            idx = np.flatnonzero(pending)
            good = cand_values >= values[idx]
            take = idx[good]
            y[take] = candidate[good]
            gain = cand_values[good] - values[take]
            values[take] = cand_values[good]
            product[take] = sub_product[good]
            eta[take] = np.minimum(eta[take] * 2.0, config.step_size * 2.0**_MAX_HALVINGS)
            improved[take] = gain > config.objective_tol * (1.0 + np.abs(values[take]))
            pending[take] = False
            eta[pending] *= config.backtrack_factor
        active &= improved

    return validate_stochastic(y, tol=1e-6)


def estimate_t_direct(y_hat: RowStochasticMatrix, selections: OneHotMatrix, dirichlet=None) -> RowStochasticMatrix:
    """Closed-form MAP transition estimate from soft classes and hard labels.

    Accumulates M[y, s] = sum over samples labelled s of Y_hat[i, y], adds
    the pseudo-counts, and normalizes each class row:

        T_hat = rownorm(Y_hat' S_D + A).

    Raises
    ------
    EmptyClass
      If some class row receives zero total mass (no data and no prior).
    """
    if y_hat.rows != selections.rows:
        raise DimensionMismatch(f"Y_hat has {y_hat.rows} rows but selections has {selections.rows}")
    m_y, m_s = y_hat.cols, selections.cols
    counts = np.zeros((m_s, m_y))
    np.add.at(counts, selections.labels, y_hat.data)
    counts = counts.T
    if dirichlet is not None:
        a = np.asarray(dirichlet, dtype=np.float64)
        if a.shape != (m_y, m_s):
            raise DimensionMismatch(f"dirichlet has shape {a.shape}, expected {(m_y, m_s)}")
        if np.any(a < 0):
            raise DomainError("dirichlet pseudo-counts must be nonnegative")
        counts = counts + a
    sums = counts.sum(axis=1)
    if np.any(sums == 0.0):
        y = int(np.argmax(sums == 0.0))
        raise EmptyClass(f"class {y} received zero total mass; supply pseudo-counts or data")
    return validate_stochastic(counts / sums[:, None], tol=1e-9)


def estimate_w(y_hat: RowStochasticMatrix, transition, selections: OneHotMatrix) -> RowStochasticMatrix:
    """Correct hard labels into class posteriors.

    W[i, y] propto T[y, s_i] * Y_hat[i, y], renormalized per sample. Only
    the column of T matching each sample's label enters, and only up to a
    per-column scale, so ``transition`` may be any nonnegative matrix (a
    row-stochastic one included).

    Raises
    ------
    ZeroPosterior
      If some sample's product row is identically zero.
    """
    t = transition.data if isinstance(transition, RowStochasticMatrix) else np.asarray(transition, dtype=np.float64)
    if t.ndim != 2:
        raise DimensionMismatch(f"transition must be 2-d, got shape {t.shape}")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise DomainError("transition entries must be finite and nonnegative")
    if y_hat.rows != selections.rows:
        raise DimensionMismatch(f"Y_hat has {y_hat.rows} rows but selections has {selections.rows}")
    if t.shape[0] != y_hat.cols:
        raise DimensionMismatch(f"T has {t.shape[0]} rows but Y_hat has {y_hat.cols} columns")
    if t.shape[1] != selections.cols:
        raise DimensionMismatch(f"T has {t.shape[1]} columns but selections has {selections.cols}")
    numer = t.T[selections.labels] * y_hat.data
    sums = numer.sum(axis=1)
    if np.any(sums == 0.0):
        i = int(np.argmax(sums == 0.0))
        raise ZeroPosterior(f"sample {i} has zero posterior mass for its label {selections.labels[i]}")
    return validate_stochastic(numer / sums[:, None], tol=1e-9)


class SoftClassifier(Protocol):
    """A classifier that fits per-class densities to soft targets."""

    def fit_soft(self, features: np.ndarray, targets: np.ndarray) -> "SoftClassifier": ...

    def predict_proba(self, features: np.ndarray, loo: bool = False) -> np.ndarray: ...


def iterative_refine(
    dataset: LabeledDataset,
    classifier: SoftClassifier,
    prior: Prior,
    config: InferenceConfig = InferenceConfig(),
    rounds: int = 3,
) -> InferenceResult:
    """Alternate between fitting the classifier and re-estimating (Y, T, W).

    Round zero fits the classifier to the observed one-hot labels, runs the
    joint MAP estimate on its predictions, and corrects the labels into W.
    Each following round refits the classifier on the current W, reads off
    new class memberships, re-estimates T in closed form, and rebuilds W.
    The trace holds the objective of each round's (Y, T) against the round
    zero selection estimates.
    """
    if rounds < 0:
        raise DomainError(f"rounds must be nonnegative, got {rounds}")
    s_dense = dataset.selections.data
    classifier.fit_soft(dataset.features, s_dense)
    s_hat = validate_stochastic(classifier.predict_proba(dataset.features, loo=True), tol=1e-6)

    result = infer_joint(s_hat, prior, config)
    y_hat, t_hat = result.y_hat, result.t_hat
    w_hat = estimate_w(y_hat, t_hat, dataset.selections)
    log_py = _log_prior(prior.class_prior)
    entropy = _entropy(s_hat.data)

    def trace_value(y, t):
        value, _ = _objective_parts(s_hat.data, y.data, t.data, log_py, prior.dirichlet, config.floor)
        return value - entropy

    trace = [trace_value(y_hat, t_hat)]
    for _ in range(rounds):
        classifier.fit_soft(dataset.features, w_hat.data)
        y_hat = validate_stochastic(classifier.predict_proba(dataset.features, loo=True), tol=1e-6)
        t_hat = estimate_t_direct(y_hat, dataset.selections, prior.dirichlet)
        w_hat = estimate_w(y_hat, t_hat, dataset.selections)
        trace.append(trace_value(y_hat, t_hat))

    return InferenceResult(
        y_hat=y_hat,
        t_hat=t_hat,
        objective_trace=np.asarray(trace),
        converged=True,
        iterations=rounds,
        w_hat=w_hat,
    )
