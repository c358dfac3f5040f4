"""Error and warning taxonomy for the decouple package.

Raised conditions are exceptions; conditions that are reported but allow
the computation to continue with a documented fallback are warnings.
"""


class DecoupleError(Exception):
    """Base class for all errors raised by this package."""


class NegativeEntry(DecoupleError):
    """A probability entry is negative beyond tolerance."""


class RowSumViolation(DecoupleError):
    """A row of a stochastic matrix does not sum to one within tolerance."""


class DimensionMismatch(DecoupleError):
    """Operand shapes are incompatible."""


class InconsistentSpec(DecoupleError):
    """A transition spec's parameters contradict each other."""


class ZeroLabelMass(DecoupleError):
    """A selection label has zero marginal probability."""


class ZeroClassMass(DecoupleError):
    """A class has zero marginal probability where positive mass is required."""


class ClassCountMismatch(DecoupleError):
    """Blocks being combined disagree on the number of classes."""


class DomainError(DecoupleError):
    """A log or ratio is evaluated outside its domain."""


class NoProgress(DecoupleError):
    """Line search could not find an ascent step at the first iteration."""


class EmptyClass(DecoupleError):
    """A class receives zero total mass during estimation."""


class ZeroPosterior(DecoupleError):
    """A sample's posterior row has zero total mass."""


class EmptyDataset(DecoupleError):
    """The dataset contains no samples."""


class AllZeroVariance(DecoupleError):
    """Every feature has zero variance; no density model can be fit."""


class ParseError(DecoupleError):
    """A file or payload is malformed."""


class ColumnCountMismatch(DecoupleError):
    """A parsed matrix has a different column count than expected."""


class MissingTrueClasses(DecoupleError):
    """An operation needs ground-truth classes the dataset does not carry."""


class InvalidCovariance(DecoupleError):
    """A covariance matrix is not symmetric positive definite."""


class BadMagic(DecoupleError):
    """An IDX file starts with an unexpected magic number."""


class TruncatedFile(DecoupleError):
    """A binary file ends before its declared payload."""


class LengthMismatch(DimensionMismatch):
    """Paired sequences disagree on the number of records."""


class InsufficientSamples(DecoupleError):
    """A class has fewer samples than the experiment requests."""


class DecoupleWarning(UserWarning):
    """Base class for reported-but-recoverable conditions."""


class DegeneratePrior(DecoupleWarning):
    """The label prior puts all mass on a single label; weight falls back to 0."""


class FoldTooSmall(DecoupleWarning):
    """A cross-validation fold lost a label; affected rows fall back to the prior."""
