"""Per-example tangent projector factors, and the "TATC" cache file."""

import logging
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from core.binio import FLOAT, BinaryReader, pack_floats
from core.datasets import ManifoldDataset
from core.exceptions import (
    CacheMismatch,
    DimensionMismatch,
    FormatError,
    HashMismatch,
    RankDeficient,
)
from core.linalg import as_matrix, projector_factors
from tangent.estimation import (
    LatentModel,
    SamplingSpec,
    TangentEntry,
    estimate_tangent_space,
)

logger = logging.getLogger(__name__)

MAGIC = b"TATC"
VERSION = 1
HEADER = struct.Struct("<4sIBIIQ32s")


class TangentSource(Enum):
    """Where the cached bases came from; the value is the on-disk flag."""

    EXACT = 0
    ESTIMATED = 1

    @property
    def label(self: "TangentSource") -> str:
        """Lower-case name used in reports."""
        return self.name.lower()


@dataclass(frozen=True)
class TangentCache:
    """Bases A and left factors A(AᵀA)⁻¹ for every training example, each n×d×k."""

    bases: np.ndarray
    left_factors: np.ndarray
    source: TangentSource
    dataset_hash: bytes

    def __post_init__(self: "TangentCache") -> None:
        if self.bases.ndim != 3 or self.bases.shape != self.left_factors.shape:
            raise DimensionMismatch(
                f"bases {self.bases.shape} and left factors "
                f"{self.left_factors.shape} must match"
            )
        if len(self.dataset_hash) != 32:
            raise ValueError("dataset_hash must be a 32-byte SHA-256 digest")

    def __len__(self: "TangentCache") -> int:
        """Number of cached examples n."""
        return self.bases.shape[0]

    @property
    def dim(self: "TangentCache") -> int:
        """Ambient dimension d."""
        return self.bases.shape[1]

    @property
    def rank(self: "TangentCache") -> int:
        """Tangent dimension k."""
        return self.bases.shape[2]

    def entry(self: "TangentCache", index: int) -> TangentEntry:
        """Projector factors of example ``index``."""
        if not 0 <= index < len(self):
            raise CacheMismatch(f"example {index} outside a cache of {len(self)} entries")
        return TangentEntry(basis=self.bases[index], left_factor=self.left_factors[index])

    def matches(self: "TangentCache", dataset: ManifoldDataset) -> bool:
        """True when the cache was built from exactly ``dataset``."""
        return len(self) == len(dataset) and self.dataset_hash == dataset.content_hash()

    def tangential_components(
        self: "TangentCache", indices: Sequence[int], x: np.ndarray, x_adv: np.ndarray
    ) -> np.ndarray:
        """‖Π(x_adv_i − x_i)‖ per row, using the cached entry ``indices[i]``."""
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= len(self)):
            raise CacheMismatch(f"indices outside a cache of {len(self)} entries")
        delta = np.asarray(x_adv, dtype=np.float64) - np.asarray(x, dtype=np.float64)
        if delta.shape != (indices.size, self.dim):
            raise DimensionMismatch(f"perturbations {delta.shape} for {indices.size} indices")
        coefficients = np.einsum("nd,ndk->nk", delta, self.bases[indices])
        projected = np.einsum("ndk,nk->nd", self.left_factors[indices], coefficients)
        return np.linalg.norm(projected, axis=1)

    @property
    def nbytes(self: "TangentCache") -> int:
        """Size of the encoded file."""
        return HEADER.size + 2 * self.bases.size * FLOAT.itemsize


def build_cache(
    dataset: ManifoldDataset,
    source: Union[TangentSource, str] = TangentSource.EXACT,
    autoencoder: Optional[LatentModel] = None,
    spec: Optional[SamplingSpec] = None,
) -> TangentCache:
    """One projector factorization per example, in dataset order.

    ``exact`` factors the dataset's stored tangents; ``estimated`` runs the
    decoder-sampling estimate through ``autoencoder``.
    """
    if isinstance(source, str):
        source = TangentSource[source.upper()]
    if source is TangentSource.EXACT and dataset.tangents is None:
        raise CacheMismatch("dataset carries no exact tangents")
    if source is TangentSource.ESTIMATED and autoencoder is None:
        raise CacheMismatch("an estimated cache needs an autoencoder")
    spec = spec or SamplingSpec()
    factors = []
    for index in range(len(dataset)):
        try:
            if source is TangentSource.EXACT:
                basis = as_matrix(dataset.tangents[index], "basis")
            else:
                basis = estimate_tangent_space(autoencoder, dataset.x[index], spec=spec)
            factors.append(projector_factors(basis))
        except RankDeficient as error:
            raise RankDeficient(str(error), index=index) from error
    cache = TangentCache(
        bases=np.stack([f.basis for f in factors]),
        left_factors=np.stack([f.left_factor for f in factors]),
        source=source,
        dataset_hash=dataset.content_hash(),
    )
    logger.info(
        "built %s tangent cache: n=%d d=%d k=%d",
        source.label,
        len(cache),
        cache.dim,
        cache.rank,
    )
    return cache


def encode_cache(cache: TangentCache) -> bytes:
    """TATC v1 document: header, then A and A(AᵀA)⁻¹ of each example."""
    n, d, k = cache.bases.shape
    parts = [HEADER.pack(MAGIC, VERSION, cache.source.value, d, k, n, cache.dataset_hash)]
    for index in range(n):
        parts.append(pack_floats(cache.bases[index]))
        parts.append(pack_floats(cache.left_factors[index]))
    return b"".join(parts)


def decode_cache(buffer: bytes, label: str = "cache") -> TangentCache:
    """Parse a TATC document; the size must match the header exactly."""
    reader = BinaryReader(buffer, label)
    reader.expect_magic(MAGIC, (VERSION,))
    source_flag, d, k, n, dataset_hash = reader.unpack("<BIIQ32s")
    try:
        source = TangentSource(source_flag)
    except ValueError as error:
        raise FormatError(f"{label}: unknown source flag {source_flag}") from error
    expected = HEADER.size + 2 * n * d * k * FLOAT.itemsize
    if len(buffer) != expected:
        raise FormatError(f"{label}: {len(buffer)} bytes, header implies {expected}")
    bases = np.empty((n, d, k))
    left = np.empty((n, d, k))
    for index in range(n):
        bases[index] = reader.floats(d * k).reshape(d, k)
        left[index] = reader.floats(d * k).reshape(d, k)
    reader.expect_end()
    return TangentCache(
        bases=bases, left_factors=left, source=source, dataset_hash=dataset_hash
    )


def save_cache(cache: TangentCache, path: Union[str, Path]) -> None:
    """Write ``cache`` to ``path``."""
    Path(path).write_bytes(encode_cache(cache))
    logger.info("wrote tangent cache %s (%d bytes)", path, cache.nbytes)


def load_cache(path: Union[str, Path], expected_hash: Optional[bytes] = None) -> TangentCache:
    """Read a TATC file; with ``expected_hash`` also check which dataset it was built from."""
    cache = decode_cache(Path(path).read_bytes(), label=str(path))
    if expected_hash is not None and cache.dataset_hash != expected_hash:
        raise HashMismatch(
            f"{path} was built from dataset {cache.dataset_hash.hex()[:12]}, "
            f"not {expected_hash.hex()[:12]}"
        )
    return cache
