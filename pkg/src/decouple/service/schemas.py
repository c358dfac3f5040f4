"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

Matrix = list[list[float]]
Vector = list[float]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HealthResponse(BaseModel):
    status: str
    version: str


class TemplateResponse(BaseModel):
    transition: Matrix
    dirichlet: Matrix


class ConvertRequest(StrictModel):
    matrix: Matrix
    prior: Vector


class MatrixResponse(BaseModel):
    matrix: Matrix


class IntegrateBlock(StrictModel):
    upsilon: Matrix
    mass: float = Field(gt=0.0)
    label_masses: Optional[Vector] = None


class IntegrateRequest(StrictModel):
    blocks: list[IntegrateBlock] = Field(min_length=1)


class IntegrateResponse(BaseModel):
    upsilon: Matrix
    label_prior: Vector


class OptimizerOptions(StrictModel):
    max_iters: int = Field(default=2000, ge=1)
    step_size: float = Field(default=1.0, gt=0.0)
    backtrack_factor: float = Field(default=0.5, gt=0.0, lt=1.0)
    objective_tol: float = Field(default=1e-8, ge=0.0)
    floor: float = Field(default=1e-12, gt=0.0, le=1e-3)


class InferJointRequest(StrictModel):
    s_hat: Matrix
    class_prior: Vector
    dirichlet: Optional[Matrix] = None
    options: OptimizerOptions = Field(default_factory=OptimizerOptions)


class InferJointResponse(BaseModel):
    y_hat: Matrix
    t_hat: Matrix
    objective_trace: Vector
    converged: bool
    iterations: int


class InferYRequest(StrictModel):
    s_hat: Matrix
    transition: Matrix
    class_prior: Vector
    options: OptimizerOptions = Field(default_factory=OptimizerOptions)


class InferYResponse(BaseModel):
    y_hat: Matrix


class EstimateTRequest(StrictModel):
    y_hat: Matrix
    selections: list[int]
    num_labels: Optional[int] = Field(default=None, ge=1)
    dirichlet: Optional[Matrix] = None


class EstimateTResponse(BaseModel):
    t_hat: Matrix


class EstimateWRequest(StrictModel):
    y_hat: Matrix
    transition: Matrix
    selections: list[int]
    num_labels: Optional[int] = Field(default=None, ge=1)


class EstimateWResponse(BaseModel):
    w_hat: Matrix


class CostsRequest(StrictModel):
    upsilon: Matrix
    label_prior: Vector
    mode: str = "expected-increase"
    normalize: bool = False


class CostsResponse(BaseModel):
    costs: Matrix
    weights: Vector


class JobResponse(BaseModel):
    written: list[str]
