"""Decoupling training labels from prediction classes.

Selection labels (what the data came with) and classes (what the model
should predict) are kept separate: a row-stochastic transition matrix
links them, MAP inference recovers class densities and the transition
from selection-probability estimates, and estimated posteriors correct
the labels for retraining.
"""

from .core import (
    LabeledDataset,
    OneHotMatrix,
    Prior,
    RowStochasticMatrix,
    forward_selection,
    validate_stochastic,
)
from .costs import CostMatrix, attach_weights, cost_matrix, sample_weights
from .density import (
    KdeClassifier,
    KdeModel,
    cross_predict,
    fit_kde,
    ingest_predictions,
    predict_selection,
)
from .errors import (
    AllZeroVariance,
    BadMagic,
    ClassCountMismatch,
    ColumnCountMismatch,
    DecoupleError,
    DecoupleWarning,
    DegeneratePrior,
    DimensionMismatch,
    DomainError,
    EmptyClass,
    EmptyDataset,
    FoldTooSmall,
    InconsistentSpec,
    InsufficientSamples,
    InvalidCovariance,
    LengthMismatch,
    MissingTrueClasses,
    NegativeEntry,
    NoProgress,
    ParseError,
    RowSumViolation,
    TruncatedFile,
    ZeroClassMass,
    ZeroLabelMass,
    ZeroPosterior,
)
from .evaluation import (
    ExperimentRecord,
    RegimeBundle,
    macro_f1,
    records_from_csv,
    records_to_csv,
    run_regime,
    sweep,
    write_plot_csv,
)
from .inference import (
    InferenceConfig,
    InferenceResult,
    estimate_t_direct,
    estimate_w,
    infer_joint,
    infer_y_given_t,
    iterative_refine,
    objective,
)
from .io import read_matrix_csv, write_matrix_csv
from .seeding import child_seed, substream
from .simulation import (
    GaussianMixtureSpec,
    MixtureComponent,
    apply_labelling,
    default_fig2_spec,
    load_idx,
    sample_mixture,
    write_idx,
)
from .transitions import (
    TransitionKind,
    TransitionSpec,
    build_template,
    compose_integration,
    t_to_upsilon,
    upsilon_to_t,
)

__version__ = "0.1.0"

__all__ = [
    "LabeledDataset",
    "OneHotMatrix",
    "Prior",
    "RowStochasticMatrix",
    "forward_selection",
    "validate_stochastic",
    "CostMatrix",
    "attach_weights",
    "cost_matrix",
    "sample_weights",
    "KdeClassifier",
    "KdeModel",
    "cross_predict",
    "fit_kde",
    "ingest_predictions",
    "predict_selection",
    "AllZeroVariance",
    "BadMagic",
    "ClassCountMismatch",
    "ColumnCountMismatch",
    "DecoupleError",
    "DecoupleWarning",
    "DegeneratePrior",
    "DimensionMismatch",
    "DomainError",
    "EmptyClass",
    "EmptyDataset",
    "FoldTooSmall",
    "InconsistentSpec",
    "InsufficientSamples",
    "InvalidCovariance",
    "LengthMismatch",
    "MissingTrueClasses",
    "NegativeEntry",
    "NoProgress",
    "ParseError",
    "RowSumViolation",
    "TruncatedFile",
    "ZeroClassMass",
    "ZeroLabelMass",
    "ZeroPosterior",
    "ExperimentRecord",
    "RegimeBundle",
    "macro_f1",
    "records_from_csv",
    "records_to_csv",
    "run_regime",
    "sweep",
    "write_plot_csv",
    "InferenceConfig",
    "InferenceResult",
    "estimate_t_direct",
    "estimate_w",
    "infer_joint",
    "infer_y_given_t",
    "iterative_refine",
    "objective",
    "read_matrix_csv",
    "write_matrix_csv",
    "child_seed",
    "substream",
    "GaussianMixtureSpec",
    "MixtureComponent",
    "apply_labelling",
    "default_fig2_spec",
    "load_idx",
    "sample_mixture",
    "write_idx",
    "TransitionKind",
    "TransitionSpec",
    "build_template",
    "compose_integration",
    "t_to_upsilon",
    "upsilon_to_t",
    "__version__",
]
