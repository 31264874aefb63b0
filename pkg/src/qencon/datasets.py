"""Synthetic Gaussian two-class data and MNIST-style IDX ingestion.

Synthetic class means lie on the two lines mu_j = (2*pi/16)*(j-1) mod 2*pi
(class 0) and (2*pi/16)*(16-j) mod 2*pi (class 1) for j = 1..t, with a shared
per-feature standard deviation.

IDX files are big-endian: magic 0x00000803 (images) or 0x00000801 (labels),
then 32-bit dimension sizes, then raw bytes.  Images are 28x28 grayscale;
preprocessing block-averages them to 4x4, rescales pixels to [0, pi], keeps a
requested digit pair, and tiles the 16 features cyclically onto whatever slot
count the target encoder consumes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .encoding import (
    EncodingCircuitSpec,
    GaussianFeatureSpec,
    ry_product,
    sample_feature_matrix,
    strongly_entangling_ry,
    u3_entangled,
)
from .learn import LabeledDataset

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class SyntheticTaskSpec:
    """Two-class Gaussian task over a given encoder shape."""

    n: int
    depth: int
    family: str = "StronglyEntanglingRy"
    sigma: float = 0.8

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        # construction validates family / n / depth
        self.circuit()

    def circuit(self) -> EncodingCircuitSpec:
        if self.family == "RyProduct":
            return ry_product(self.n, self.depth)
        if self.family == "U3Entangled":
            return u3_entangled(self.n, self.depth)
        return strongly_entangling_ry(self.n, self.depth)

    @property
    def feature_count(self) -> int:
        return self.circuit().feature_count


def synthetic_spec(task: SyntheticTaskSpec, class_id: int) -> GaussianFeatureSpec:
    """Per-feature Gaussian parameters of one class."""
    if class_id not in (0, 1):
        raise ValueError("class_id must be 0 or 1")
    t = task.feature_count
    j = np.arange(1, t + 1, dtype=float)
    raw = (j - 1.0) if class_id == 0 else (16.0 - j)
    means = np.mod((2.0 * np.pi / 16.0) * raw, 2.0 * np.pi)
    return GaussianFeatureSpec(means, np.full(t, task.sigma))


def generate_dataset(task: SyntheticTaskSpec, m_per_class: int, seed: int) -> LabeledDataset:
    """Balanced two-class sample: class 0 rows first, then class 1.

    Row m draws from substream (seed, m), so the set is reproducible and
    insensitive to generation order.
    """
    if m_per_class < 1:
        raise ValueError("need at least one sample per class")
    spec = task.circuit()
    feats = np.empty((2 * m_per_class, task.feature_count))
    labels = np.zeros((2 * m_per_class, 2))
    for class_id in (0, 1):
        g = synthetic_spec(task, class_id)
        start = class_id * m_per_class
        feats[start:start + m_per_class] = sample_feature_matrix(
            g, m_per_class, seed, index_offset=start
        )
        labels[start:start + m_per_class, class_id] = 1.0
    return LabeledDataset(feats, labels, spec)


# ---------------------------------------------------------------------------
# IDX ingestion


class IdxFormatError(ValueError):
    """Malformed IDX container."""


class BadMagic(IdxFormatError):
    pass


class Truncated(IdxFormatError):
    pass


class CountMismatch(IdxFormatError):
    pass


@dataclass(frozen=True)
class RawMnist:
    images: np.ndarray  # (N, 28, 28) uint8
    labels: np.ndarray  # (N,) uint8

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise CountMismatch(
                f"{self.images.shape[0]} images vs {self.labels.shape[0]} labels"
            )
        if self.images.ndim != 3 or self.images.shape[1:] != (28, 28):
            raise IdxFormatError("images must be 28x28")
        if self.labels.size and int(self.labels.max()) > 9:
            raise IdxFormatError("labels must lie in [0, 9]")


def _read_exact(data: bytes, offset: int, count: int, path: str) -> bytes:
    if offset + count > len(data):
        raise Truncated(f"{path}: expected {offset + count} bytes, file has {len(data)}")
    return data[offset:offset + count]


def load_mnist_idx(images_path, labels_path) -> RawMnist:
    """Parse the standard IDX image/label pair; counts must agree."""
    with open(images_path, "rb") as fh:
        img_data = fh.read()
    with open(labels_path, "rb") as fh:
        lab_data = fh.read()

    magic, n_img, rows, cols = struct.unpack(">IIII", _read_exact(img_data, 0, 16, str(images_path)))
    if magic != IMAGE_MAGIC:
        raise BadMagic(f"{images_path}: magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")
    if (rows, cols) != (28, 28):
        raise IdxFormatError(f"{images_path}: image size {rows}x{cols}, expected 28x28")
    payload = _read_exact(img_data, 16, n_img * rows * cols, str(images_path))
    images = np.frombuffer(payload, dtype=np.uint8).reshape(n_img, rows, cols)

    lmagic, n_lab = struct.unpack(">II", _read_exact(lab_data, 0, 8, str(labels_path)))
    if lmagic != LABEL_MAGIC:
        raise BadMagic(f"{labels_path}: magic {lmagic:#010x}, expected {LABEL_MAGIC:#010x}")
    labels = np.frombuffer(_read_exact(lab_data, 8, n_lab, str(labels_path)), dtype=np.uint8)

    if n_img != n_lab:
        raise CountMismatch(f"{n_img} images vs {n_lab} labels")
    return RawMnist(images, labels)


def downsample_images(images: np.ndarray) -> np.ndarray:
    """28x28 -> 4x4 by averaging 7x7 blocks; output scaled into [0, pi]."""
    n = images.shape[0]
    blocks = images.astype(float).reshape(n, 4, 7, 4, 7)
    means = blocks.mean(axis=(2, 4))
    return means.reshape(n, 16) / 255.0 * np.pi


def tile_features(features: np.ndarray, slots: int) -> np.ndarray:
    """Fill `slots` columns by cycling the available features (slot i <- i mod width)."""
    idx = np.arange(slots) % features.shape[1]
    return features[:, idx]


def preprocess_mnist(raw: RawMnist, digits: tuple[int, int],
                     spec: EncodingCircuitSpec | None = None) -> LabeledDataset:
    """Digit-pair dataset of 16 pixel features mapped onto an encoder.

    The first digit of the pair becomes class 0.  Defaults to the 4-qubit,
    depth-4 strongly entangling encoder, whose slot count matches the 16
    features exactly; other shapes are filled by cyclic tiling.
    """
    a, b = digits
    if a == b or not (0 <= a <= 9 and 0 <= b <= 9):
        raise ValueError("digits must be a distinct pair in [0, 9]")
    if spec is None:
        spec = strongly_entangling_ry(4, 4)
    mask = (raw.labels == a) | (raw.labels == b)
    if not np.any(raw.labels == a):
        raise ValueError(f"digit {a} absent from the data")
    if not np.any(raw.labels == b):
        raise ValueError(f"digit {b} absent from the data")
    feats16 = downsample_images(raw.images[mask])
    kept = raw.labels[mask]
    labels = np.zeros((kept.size, 2))
    labels[kept == a, 0] = 1.0
    labels[kept == b, 1] = 1.0
    return LabeledDataset(tile_features(feats16, spec.feature_count), labels, spec)
