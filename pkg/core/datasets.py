"""Labelled manifold datasets and the "TADS" dataset file format."""

import hashlib
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from core.binio import BinaryReader, pack_floats
from core.exceptions import DimensionMismatch, LabelOutOfRange
from core.linalg import as_matrix

logger = logging.getLogger(__name__)

MAGIC = b"TADS"
VERSION = 1

FLAG_TANGENTS = 1
FLAG_LATENTS = 2
FLAG_FRAME = 4

_HEADER = "<IIQIII"  # after magic and version: d, c, n, flags, k, latent_dim


@dataclass(frozen=True)
class ManifoldExample:
    """One labelled point with its latent coordinates and exact tangent basis."""

    x: np.ndarray
    label: int
    latent: Optional[np.ndarray]
    tangent_basis: Optional[np.ndarray]


@dataclass(frozen=True)
class ManifoldDataset:
    """Rows of ``x`` (n×d) with labels and optional manifold ground truth.

    ``tangents`` is n×d×k (orthonormal columns), ``latents`` n×latent_dim and
    ``frame`` the d×3 embedding used to build the data, when known.
    """

    x: np.ndarray
    labels: np.ndarray
    num_classes: int
    latents: Optional[np.ndarray] = None
    tangents: Optional[np.ndarray] = None
    frame: Optional[np.ndarray] = None

    def __post_init__(self: "ManifoldDataset") -> None:
        """Validate shapes and label range."""
        x = as_matrix(self.x, "x")
        n = x.shape[0]
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (n,):
            raise DimensionMismatch(f"labels shape {labels.shape} does not match n={n}")
        if n and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise LabelOutOfRange(f"labels outside [0, {self.num_classes})")
        if self.latents is not None and np.asarray(self.latents).shape[0] != n:
            raise DimensionMismatch("latents do not align with x")
        if self.tangents is not None:
            tangents = np.asarray(self.tangents)
            if tangents.ndim != 3 or tangents.shape[:2] != x.shape:
                raise DimensionMismatch(f"tangents shape {tangents.shape} != (n, d, k)")
        if self.frame is not None and np.asarray(self.frame).shape[0] != x.shape[1]:
            raise DimensionMismatch("frame rows do not match d")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "labels", labels)

    def __len__(self: "ManifoldDataset") -> int:
        """Number of examples."""
        return self.x.shape[0]

    @property
    def dim(self: "ManifoldDataset") -> int:
        """Ambient dimension d."""
        return self.x.shape[1]

    @property
    def tangent_dim(self: "ManifoldDataset") -> int:
        """Number of exact tangent columns k (0 when unknown)."""
        return 0 if self.tangents is None else self.tangents.shape[2]

    def example(self: "ManifoldDataset", index: int) -> ManifoldExample:
        """View of one example."""
        return ManifoldExample(
            x=self.x[index],
            label=int(self.labels[index]),
            latent=None if self.latents is None else self.latents[index],
            tangent_basis=None if self.tangents is None else self.tangents[index],
        )

    def class_histogram(self: "ManifoldDataset") -> np.ndarray:
        """Example count per class."""
        return np.bincount(self.labels, minlength=self.num_classes)

    def content_hash(self: "ManifoldDataset") -> bytes:
        """SHA-256 of the TADS encoding; tangent caches are keyed by it."""
        return hashlib.sha256(encode_dataset(self)).digest()


@dataclass(frozen=True)
class DatasetSplit:
    """Train and test sets drawn from one manifold (sharing the same frame)."""

    train: ManifoldDataset
    test: ManifoldDataset


def encode_dataset(dataset: ManifoldDataset) -> bytes:
    """Serialize ``dataset`` in the TADS v1 layout."""
    n, d = dataset.x.shape
    flags = 0
    latent_dim = 0
    if dataset.tangents is not None:
        flags |= FLAG_TANGENTS
    if dataset.latents is not None:
        flags |= FLAG_LATENTS
        latent_dim = np.asarray(dataset.latents).shape[1]
    if dataset.frame is not None:
        flags |= FLAG_FRAME
    parts = [
        MAGIC,
        struct.pack("<I", VERSION),
        struct.pack(
            _HEADER, d, dataset.num_classes, n, flags, dataset.tangent_dim, latent_dim
        ),
    ]
    for index in range(n):
        parts.append(struct.pack("<I", int(dataset.labels[index])))
        parts.append(pack_floats(dataset.x[index]))
        if dataset.latents is not None:
            parts.append(pack_floats(dataset.latents[index]))
        if dataset.tangents is not None:
            parts.append(pack_floats(dataset.tangents[index]))
    if dataset.frame is not None:
        parts.append(pack_floats(dataset.frame))
    return b"".join(parts)


def decode_dataset(buffer: bytes, label: str = "dataset") -> ManifoldDataset:
    """Parse a TADS document; raises FormatError on malformed input."""
    reader = BinaryReader(buffer, label)
    reader.expect_magic(MAGIC, (VERSION,))
    d, c, n, flags, k, latent_dim = reader.unpack(_HEADER)
    x = np.empty((n, d))
    labels = np.empty(n, dtype=np.int64)
    latents = np.empty((n, latent_dim)) if flags & FLAG_LATENTS else None
    tangents = np.empty((n, d, k)) if flags & FLAG_TANGENTS else None
    for index in range(n):
        (labels[index],) = reader.unpack("<I")
        x[index] = reader.floats(d)
        if latents is not None:
            latents[index] = reader.floats(latent_dim)
        if tangents is not None:
            tangents[index] = reader.floats(d * k).reshape(d, k)
    frame = reader.floats(d * 3).reshape(d, 3) if flags & FLAG_FRAME else None
    reader.expect_end()
    return ManifoldDataset(
        x=x, labels=labels, num_classes=c, latents=latents, tangents=tangents, frame=frame
    )


def save_dataset(dataset: ManifoldDataset, path: Union[str, Path]) -> bytes:
    """Write ``dataset`` to ``path``; returns the content hash."""
    payload = encode_dataset(dataset)
    Path(path).write_bytes(payload)
    digest = hashlib.sha256(payload).digest()
    logger.info(
        "wrote %s (n=%d, d=%d, sha256=%s)", path, len(dataset), dataset.dim, digest.hex()[:12]
    )
    return digest


def load_dataset(path: Union[str, Path]) -> ManifoldDataset:
    """Read a TADS file."""
    return decode_dataset(Path(path).read_bytes(), label=str(path))
