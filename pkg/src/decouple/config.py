"""Run configuration: one JSON document, one section per module.

Commands read the sections they need; unknown keys anywhere are rejected
so a typo fails loudly with the offending field named.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from .inference import InferenceConfig
from .transitions import TransitionKind, TransitionSpec


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MixtureComponentConfig(StrictModel):
    mean: list[float]
    covariance: list[list[float]]
    class_index: int
    weight: float = 1.0


class MixtureConfig(StrictModel):
    kind: Literal["fig2", "custom"] = "fig2"
    components: Optional[list[MixtureComponentConfig]] = None
    negative_class: Optional[int] = None


class SimulateConfig(StrictModel):
    n: int = Field(default=2000, ge=0)
    mixture: MixtureConfig = Field(default_factory=MixtureConfig)


class TransitionConfig(StrictModel):
    kind: Literal[
        "supervised",
        "positive-unlabelled",
        "semi-supervised",
        "semi-supervised-with-negative",
        "multi-positive-with-negative",
        "multi-positive-noisy",
        "custom",
    ] = "semi-supervised"
    m_y: int = Field(default=4, ge=1)
    m_s: Optional[int] = Field(default=None, ge=1)
    label_rate: float = Field(default=0.1, ge=0.0, le=1.0)
    noise_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    prior_strength: float = Field(default=10.0, ge=0.0)
    matrix: Optional[list[list[float]]] = None

    def to_spec(self) -> TransitionSpec:
        kind = TransitionKind(self.kind)
        m_s = self.m_s
        if m_s is None:
            if kind is TransitionKind.SEMI_SUPERVISED:
                m_s = self.m_y + 1
            else:
                m_s = self.m_y
        return TransitionSpec(
            kind=kind,
            m_y=self.m_y,
            m_s=m_s,
            label_rate=self.label_rate,
            noise_rate=self.noise_rate,
            prior_strength=self.prior_strength,
            matrix=None if self.matrix is None else tuple(map(tuple, self.matrix)),
        )


class DataConfig(StrictModel):
    features: Optional[str] = None
    selections: Optional[str] = None
    true_classes: Optional[str] = None
    sample_weights: Optional[str] = None
    num_labels: Optional[int] = Field(default=None, ge=1)


class KdeConfig(StrictModel):
    bandwidth: Optional[float] = Field(default=None, gt=0.0)
    folds: int = Field(default=5, ge=2)


class InferenceSection(StrictModel):
    s_hat: Optional[str] = None
    class_prior: Optional[list[float]] = None
    known_t: Optional[str] = None
    max_iters: int = Field(default=2000, ge=1)
    step_size: float = Field(default=1.0, gt=0.0)
    backtrack_factor: float = Field(default=0.5, gt=0.0, lt=1.0)
    objective_tol: float = Field(default=1e-8, ge=0.0)
    floor: float = Field(default=1e-12, gt=0.0, le=1e-3)

    def to_config(self, seed: int) -> InferenceConfig:
        return InferenceConfig(
            max_iters=self.max_iters,
            step_size=self.step_size,
            backtrack_factor=self.backtrack_factor,
            objective_tol=self.objective_tol,
            floor=self.floor,
            seed=seed,
        )


class EstimateConfig(StrictModel):
    y_hat: Optional[str] = None
    t_hat: Optional[str] = None
    use_dirichlet: bool = True


class CostsConfig(StrictModel):
    mode: Literal["expected-increase", "simple"] = "expected-increase"
    normalize: bool = False
    label_prior: Optional[list[float]] = None


class BaseDataConfig(StrictModel):
    kind: Literal["fig2", "idx"] = "fig2"
    n: int = Field(default=2000, ge=1)
    images: Optional[str] = None
    labels: Optional[str] = None
    classes: Optional[list[int]] = None
    subsample: Optional[int] = Field(default=None, ge=1)


class ExperimentConfig(StrictModel):
    regime: Literal[
        "supervised",
        "semi-supervised",
        "k-positive",
        "positive-unlabelled",
        "noisy-20",
        "noisy-50",
    ] = "positive-unlabelled"
    labelled_counts: list[int] = Field(default_factory=lambda: [50])
    weightings: list[Literal["flat", "cost-weighted"]] = Field(default_factory=lambda: ["flat"])
    seeds: list[int] = Field(default_factory=lambda: [0, 1])
    base: BaseDataConfig = Field(default_factory=BaseDataConfig)
    train_fraction: float = Field(default=0.5, gt=0.0, le=1.0)
    folds: int = Field(default=5, ge=2)
    bandwidth: Optional[float] = Field(default=None, gt=0.0)
    prior_strength: float = Field(default=10.0, ge=0.0)
    positive_class: int = Field(default=0, ge=0)
    k_positive: Optional[int] = Field(default=None, ge=1)
    selection_source: Literal["kde", "labels"] = "kde"
    test_on_train: bool = False
    cost_mode: Literal["expected-increase", "simple"] = "expected-increase"
    cost_normalize: bool = False
    max_iters: int = Field(default=500, ge=1)
    objective_tol: float = Field(default=1e-8, ge=0.0)


class RunConfig(StrictModel):
    """Top-level configuration; flags override the file's scalar fields."""

    seed: int = 0
    out: str = "out"
    jobs: int = Field(default=1, ge=1)
    simulate: SimulateConfig = Field(default_factory=SimulateConfig)
    transition: TransitionConfig = Field(default_factory=TransitionConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    kde: KdeConfig = Field(default_factory=KdeConfig)
    inference: InferenceSection = Field(default_factory=InferenceSection)
    estimate: EstimateConfig = Field(default_factory=EstimateConfig)
    costs: CostsConfig = Field(default_factory=CostsConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
