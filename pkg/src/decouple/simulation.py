"""Synthetic data generation and IDX image loading.

The Gaussian-mixture sampler covers the standard four-cluster benchmark
layout; apply_labelling turns ground-truth classes into observed selection
labels by sampling each sample's transition row. IDX files (big-endian
image/label pairs) load into the same dataset type with pixels flattened
to reals.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .core import LabeledDataset, OneHotMatrix, RowStochasticMatrix
from .errors import (
    BadMagic,
    DimensionMismatch,
    InconsistentSpec,
    InvalidCovariance,
    LengthMismatch,
    MissingTrueClasses,
    TruncatedFile,
)
from .seeding import substream

_IMAGE_MAGIC = 0x00000803
_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True, eq=False)
class MixtureComponent:
    mean: np.ndarray
    covariance: np.ndarray
    class_index: int
    weight: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        if mean.ndim != 1:
            raise DimensionMismatch(f"mean must be a vector, got shape {mean.shape}")
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise DimensionMismatch(f"covariance shape {cov.shape} does not match mean {mean.shape}")
        if not np.allclose(cov, cov.T):
            raise InvalidCovariance("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise InvalidCovariance("covariance must be positive definite") from None
        if self.class_index < 0:
            raise InconsistentSpec(f"class_index must be nonnegative, got {self.class_index}")
        if not self.weight > 0.0:
            raise InconsistentSpec(f"component weight must be positive, got {self.weight}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)


@dataclass(frozen=True, eq=False)
class GaussianMixtureSpec:
    """A mixture of Gaussian components, each tied to a class index."""

    components: tuple
    negative_class: int | None = None

    def __post_init__(self):
        components = tuple(
            c if isinstance(c, MixtureComponent) else MixtureComponent(**c) for c in self.components
        )
        if not components:
            raise InconsistentSpec("at least one mixture component is required")
        d = components[0].mean.shape[0]
        if any(c.mean.shape[0] != d for c in components):
            raise DimensionMismatch("all components must share one dimensionality")
        object.__setattr__(self, "components", components)
        if self.negative_class is not None and not 0 <= self.negative_class < self.m_y:
            raise InconsistentSpec(f"negative_class {self.negative_class} outside [0, {self.m_y})")

    @property
    def d(self) -> int:
        return self.components[0].mean.shape[0]

    @property
    def m_y(self) -> int:
        return max(c.class_index for c in self.components) + 1

    @property
    def weights(self) -> np.ndarray:
        w = np.array([c.weight for c in self.components])
        return w / w.sum()


def default_fig2_spec() -> GaussianMixtureSpec:
    """Four unit-covariance Gaussians on the corners of a side-4 square,
    equal weights, one class each, the last class acting as negative."""
    corners = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0)]
    components = tuple(
        MixtureComponent(mean=np.array(m), covariance=np.eye(2), class_index=i, weight=0.25)
        for i, m in enumerate(corners)
    )
    return GaussianMixtureSpec(components=components, negative_class=3)


def sample_mixture(spec: GaussianMixtureSpec, n: int, seed: int = 0) -> LabeledDataset:
    """Draw n samples; returns a dataset with true classes but no selections.

    Component assignment and each component's draws use separate named
    substreams of the seed, so per-component generation can be partitioned
    without changing the result.
    """
    if n < 0:
        raise InconsistentSpec(f"n must be nonnegative, got {n}")
    weights = spec.weights
    assign = substream(seed, "mixture-assign").choice(len(spec.components), size=n, p=weights)
    features = np.empty((n, spec.d))
    classes = np.empty(n, dtype=np.int64)
    for c, component in enumerate(spec.components):
        rows = np.flatnonzero(assign == c)
        z = substream(seed, "mixture-component", c).standard_normal((rows.size, spec.d))
        features[rows] = component.mean + z @ component._chol.T
        classes[rows] = component.class_index
    return LabeledDataset(features=features, selections=None, true_classes=classes)


def apply_labelling(
    data: LabeledDataset | np.ndarray,
    transition: RowStochasticMatrix,
    seed: int = 0,
    *,
    true_classes: np.ndarray | None = None,
) -> LabeledDataset:
    """Draw each sample's selection label from its class's transition row.

    ``data`` is either a dataset carrying true classes or a plain feature
    array with the classes passed separately.
    """
    if isinstance(data, LabeledDataset):
        if true_classes is not None:
            raise InconsistentSpec("pass true_classes either in the dataset or separately, not both")
        if data.true_classes is None:
            raise MissingTrueClasses("cannot draw selection labels without true classes")
        features = data.features
        classes = data.true_classes
    else:
        if true_classes is None:
            raise MissingTrueClasses("cannot draw selection labels without true classes")
        features = np.asarray(data, dtype=np.float64)
        classes = np.asarray(true_classes, dtype=np.int64)
    if classes.ndim != 1:
        raise DimensionMismatch(f"true_classes must be 1-d, got shape {classes.shape}")
    if classes.size and (classes.min() < 0 or classes.max() >= transition.rows):
        raise DimensionMismatch(
            f"class indices must lie in [0, {transition.rows}) to index transition rows"
        )
    u = substream(seed, "labelling").random(classes.size)
    cdf = np.cumsum(transition.data, axis=1)
    labels = np.minimum((cdf[classes] <= u[:, None]).sum(axis=1), transition.cols - 1)
    return LabeledDataset(
        features=features,
        selections=OneHotMatrix(labels=labels, cols=transition.cols),
        true_classes=classes,
    )


def _read_exact(path, expected_magic: int, dims: int):
    raw = open(path, "rb").read()
    if len(raw) < 4 * (dims + 1):
        raise TruncatedFile(f"{path}: header needs {4 * (dims + 1)} bytes, file has {len(raw)}")
    magic = struct.unpack(">i", raw[:4])[0]
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    shape = struct.unpack(">" + "i" * dims, raw[4 : 4 * (dims + 1)])
    payload = raw[4 * (dims + 1) :]
    expected = int(np.prod(shape))
    if len(payload) != expected:
        raise TruncatedFile(f"{path}: payload holds {len(payload)} bytes, header declares {expected}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(shape)


def load_idx(images_path: str | os.PathLike, labels_path: str | os.PathLike) -> LabeledDataset:
    """Load a big-endian IDX image/label pair.

    Pixels flatten to one row of reals in [0, 255] per image; the stored
    labels become both the selection labels and the true classes.

    Raises
    ------
    BadMagic, TruncatedFile, LengthMismatch
    """
    images = _read_exact(images_path, _IMAGE_MAGIC, 3)
    labels = _read_exact(labels_path, _LABEL_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise LengthMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    classes = labels.astype(np.int64)
    return LabeledDataset(
        features=images.reshape(images.shape[0], -1).astype(np.float64),
        selections=OneHotMatrix(labels=classes, cols=int(classes.max()) + 1 if classes.size else 1),
        true_classes=classes,
    )


def write_idx(
    images: np.ndarray,
    labels: np.ndarray,
    images_path: str | os.PathLike,
    labels_path: str | os.PathLike,
) -> None:
    """Write an image/label pair in the big-endian IDX format."""
    images = np.asarray(images)
    labels = np.asarray(labels)
    if images.ndim != 3:
        raise DimensionMismatch(f"images must be (n, rows, cols), got shape {images.shape}")
    if labels.shape != (images.shape[0],):
        raise LengthMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">iiii", _IMAGE_MAGIC, *images.shape))
        fh.write(np.ascontiguousarray(images, dtype=np.uint8).tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">ii", _LABEL_MAGIC, labels.shape[0]))
        fh.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())
