"""HTTP service exposing the package operations.

Matrix-level operations take and return JSON arrays; batch jobs take a
full run configuration, write their files server-side, and return the
manifest. Domain failures map to 400 with a typed error body; malformed
requests fail pydantic validation with the offending field named.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..commands import COMMANDS, run_command
from ..config import RunConfig, TransitionConfig
from ..core import OneHotMatrix, Prior, validate_stochastic
from ..costs import cost_matrix, sample_weights
from ..errors import DecoupleError, ParseError
from ..inference import (
    InferenceConfig,
    estimate_t_direct,
    estimate_w,
    infer_joint,
    infer_y_given_t,
)
from ..transitions import build_template, compose_integration, t_to_upsilon, upsilon_to_t
from . import schemas


def _matrix(data: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.atleast_2d(data)]


def _selections(labels: list[int], num_labels: int | None, width: int | None = None) -> OneHotMatrix:
    cols = num_labels
    if cols is None:
        cols = width
    if cols is None:
        cols = max(labels) + 1 if labels else 1
    return OneHotMatrix(labels=np.asarray(labels, dtype=np.int64), cols=cols)


def _options(opt: schemas.OptimizerOptions) -> InferenceConfig:
    return InferenceConfig(
        max_iters=opt.max_iters,
        step_size=opt.step_size,
        backtrack_factor=opt.backtrack_factor,
        objective_tol=opt.objective_tol,
        floor=opt.floor,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="decouple", version=__version__)

    @app.exception_handler(DecoupleError)
    async def domain_error(_: Request, exc: DecoupleError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": {"type": type(exc).__name__, "message": str(exc)}},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/template", response_model=schemas.TemplateResponse)
    def template(body: TransitionConfig) -> schemas.TemplateResponse:
        transition, dirichlet = build_template(body.to_spec())
        return schemas.TemplateResponse(
            transition=_matrix(transition.data), dirichlet=_matrix(dirichlet)
        )

    @app.post("/convert/t-to-upsilon", response_model=schemas.MatrixResponse)
    def convert_t(body: schemas.ConvertRequest) -> schemas.MatrixResponse:
        t = validate_stochastic(np.asarray(body.matrix), tol=1e-6)
        return schemas.MatrixResponse(matrix=_matrix(t_to_upsilon(t, body.prior).data))

    @app.post("/convert/upsilon-to-t", response_model=schemas.MatrixResponse)
    def convert_upsilon(body: schemas.ConvertRequest) -> schemas.MatrixResponse:
        u = validate_stochastic(np.asarray(body.matrix), tol=1e-6)
        return schemas.MatrixResponse(matrix=_matrix(upsilon_to_t(u, body.prior).data))

    @app.post("/integrate", response_model=schemas.IntegrateResponse)
    def integrate(body: schemas.IntegrateRequest) -> schemas.IntegrateResponse:
        blocks = []
        for block in body.blocks:
            upsilon = validate_stochastic(np.asarray(block.upsilon), tol=1e-6)
            if block.label_masses is None:
                blocks.append((upsilon, block.mass))
            else:
                blocks.append((upsilon, block.mass, block.label_masses))
        stacked, prior = compose_integration(blocks)
        return schemas.IntegrateResponse(
            upsilon=_matrix(stacked.data), label_prior=[float(v) for v in prior]
        )

    @app.post("/infer/joint", response_model=schemas.InferJointResponse)
    def infer_joint_ep(body: schemas.InferJointRequest) -> schemas.InferJointResponse:
        s_hat = validate_stochastic(np.asarray(body.s_hat), tol=1e-6)
        prior = Prior(
            class_prior=np.asarray(body.class_prior),
            dirichlet=None if body.dirichlet is None else np.asarray(body.dirichlet),
        )
        result = infer_joint(s_hat, prior, _options(body.options))
        return schemas.InferJointResponse(
            y_hat=_matrix(result.y_hat.data),
            t_hat=_matrix(result.t_hat.data),
            objective_trace=[float(v) for v in result.objective_trace],
            converged=result.converged,
            iterations=result.iterations,
        )

    @app.post("/infer/y", response_model=schemas.InferYResponse)
    def infer_y_ep(body: schemas.InferYRequest) -> schemas.InferYResponse:
        s_hat = validate_stochastic(np.asarray(body.s_hat), tol=1e-6)
        transition = validate_stochastic(np.asarray(body.transition), tol=1e-6)
        y_hat = infer_y_given_t(s_hat, transition, body.class_prior, _options(body.options))
        return schemas.InferYResponse(y_hat=_matrix(y_hat.data))

    @app.post("/estimate/t", response_model=schemas.EstimateTResponse)
    def estimate_t_ep(body: schemas.EstimateTRequest) -> schemas.EstimateTResponse:
        y_hat = validate_stochastic(np.asarray(body.y_hat), tol=1e-6)
        selections = _selections(body.selections, body.num_labels)
        dirichlet = None if body.dirichlet is None else np.asarray(body.dirichlet)
        t_hat = estimate_t_direct(y_hat, selections, dirichlet)
        return schemas.EstimateTResponse(t_hat=_matrix(t_hat.data))

    @app.post("/estimate/w", response_model=schemas.EstimateWResponse)
    def estimate_w_ep(body: schemas.EstimateWRequest) -> schemas.EstimateWResponse:
        y_hat = validate_stochastic(np.asarray(body.y_hat), tol=1e-6)
        transition = np.asarray(body.transition, dtype=np.float64)
        selections = _selections(body.selections, body.num_labels, transition.shape[1] if transition.ndim == 2 else 1)
        w_hat = estimate_w(y_hat, transition, selections)
        return schemas.EstimateWResponse(w_hat=_matrix(w_hat.data))

    @app.post("/costs", response_model=schemas.CostsResponse)
    def costs_ep(body: schemas.CostsRequest) -> schemas.CostsResponse:
        upsilon = validate_stochastic(np.asarray(body.upsilon), tol=1e-6)
        costs = cost_matrix(upsilon)
        weights = sample_weights(costs, body.label_prior, mode=body.mode, normalize=body.normalize)
        return schemas.CostsResponse(
            costs=_matrix(costs.data), weights=[float(v) for v in weights]
        )

    @app.post("/jobs/{command}", response_model=schemas.JobResponse)
    def job(command: str, body: RunConfig) -> schemas.JobResponse:
        if command not in COMMANDS:
            raise ParseError(f"unknown command {command!r}; expected one of {sorted(COMMANDS)}")
        result = run_command(command, body)
        return schemas.JobResponse(written=result["written"])

    return app
