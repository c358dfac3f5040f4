"""Shared helpers for the test suite."""

import numpy as np
import pytest


def rand_stochastic(rng, rows, cols, concentration=1.0):
    """Random row-stochastic matrix via per-row Dirichlet draws."""
    return rng.dirichlet(np.full(cols, concentration), size=rows)


def rand_prior(rng, size, concentration=2.0):
    return rng.dirichlet(np.full(size, concentration))


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


def slsqp_map_t(counts):
    """Numeric per-row maximizer of sum_s c_s log t_s over the simplex.

    Independent oracle for the closed-form transition estimate: solves each
    row with SLSQP instead of normalizing, so agreement is evidence the
    closed form is the argmax rather than a restatement of it.
    """
    from scipy.optimize import minimize

    counts = np.asarray(counts, dtype=np.float64)
    rows = []
    for c in counts:
        def neg(t, c=c):
            return -float(np.sum(c * np.log(np.maximum(t, 1e-300))))

        def grad(t, c=c):
            return -c / np.maximum(t, 1e-300)

        res = minimize(
            neg,
            np.full(c.size, 1.0 / c.size),
            jac=grad,
            method="SLSQP",
            bounds=[(1e-12, 1.0)] * c.size,
            constraints=[
                {
                    "type": "eq",
                    "fun": lambda t: float(t.sum()) - 1.0,
                    "jac": lambda t: np.ones_like(t),
                }
            ],
            options={"maxiter": 300, "ftol": 1e-14},
        )
        assert res.success, res.message
        rows.append(res.x)
    return np.asarray(rows)
