"""How good an estimated tangent cache is, and what it costs to store and to skip."""

import time
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from core.datasets import ManifoldDataset
from core.exceptions import CacheMismatch
from core.linalg import principal_angles, projector_factors
from tangent.cache import TangentCache, TangentSource
from tangent.estimation import (
    LatentModel,
    SamplingSpec,
    estimate_tangent_space,
    tangential_component,
)


@dataclass(frozen=True)
class AngleSummary:
    """Largest principal angles, in degrees."""

    count: int
    minimum: float
    mean: float
    maximum: float

    def as_dict(self: "AngleSummary") -> Dict[str, float]:
        """Plain mapping for JSON reports."""
        return asdict(self)


def summarize_angles(radians: np.ndarray) -> AngleSummary:
    """Count, min, mean and max of ``radians`` converted to degrees."""
    degrees = np.degrees(np.asarray(radians, dtype=np.float64))
    return AngleSummary(
        count=int(degrees.size),
        minimum=float(degrees.min()),
        mean=float(degrees.mean()),
        maximum=float(degrees.max()),
    )


def largest_angles_to_exact(cache: TangentCache, dataset: ManifoldDataset) -> np.ndarray:
    """Largest principal angle (radians) between each cached basis and the exact tangents."""
    if dataset.tangents is None:
        raise CacheMismatch("dataset carries no exact tangents to compare against")
    if len(cache) != len(dataset) or cache.dim != dataset.dim:
        raise CacheMismatch("cache does not align with the dataset")
    return np.array(
        [
            principal_angles(cache.bases[i], dataset.tangents[i])[-1]
            for i in range(len(dataset))
        ]
    )


def random_subspace_baseline(
    dataset: ManifoldDataset, rank: int, draws: int, rng: np.random.Generator
) -> np.ndarray:
    """Largest principal angle between Gaussian random ``rank``-subspaces and exact tangents."""
    if dataset.tangents is None:
        raise CacheMismatch("dataset carries no exact tangents to compare against")
    angles = np.empty(draws)
    for draw in range(draws):
        exact = dataset.tangents[draw % len(dataset)]
        angles[draw] = principal_angles(rng.standard_normal((dataset.dim, rank)), exact)[-1]
    return angles


@dataclass(frozen=True)
class StorageReport:
    """Cache file size against storing a dense d×d projector per example."""

    examples: int
    dim: int
    rank: int
    cache_bytes: int
    dense_bytes: int

    @property
    def ratio(self: "StorageReport") -> float:
        """Cache bytes per dense-projector byte."""
        return self.cache_bytes / self.dense_bytes


def storage_report(cache: TangentCache) -> StorageReport:
    """Encoded size of ``cache`` next to n dense float64 d×d projectors."""
    return StorageReport(
        examples=len(cache),
        dim=cache.dim,
        rank=cache.rank,
        cache_bytes=cache.nbytes,
        dense_bytes=len(cache) * cache.dim * cache.dim * 8,
    )


@dataclass(frozen=True)
class TimingReport:
    """Seconds for one pass of tangential components over every cached example."""

    examples: int
    cached_seconds: float
    recomputed_seconds: float
    max_difference: float

    @property
    def speedup(self: "TimingReport") -> float:
        """How many times faster the cached pass ran."""
        return self.recomputed_seconds / max(self.cached_seconds, 1e-12)

    def as_dict(self: "TimingReport") -> Dict[str, Any]:
        """Plain mapping for JSON reports, speedup included."""
        return {**asdict(self), "speedup": self.speedup}


def timing_report(
    cache: TangentCache,
    dataset: ManifoldDataset,
    rng: np.random.Generator,
    epsilon: float = 0.03,
    autoencoder: Optional[LatentModel] = None,
    spec: Optional[SamplingSpec] = None,
) -> TimingReport:
    """Time cached tangential components against rebuilding every projector first.

    The perturbations are uniform in the ε-box around each example. Rebuilding
    follows the cache's source: exact caches refactor the dataset's tangents,
    estimated caches rerun the decoder-sampling estimate through
    ``autoencoder``. Both passes must agree; ``max_difference`` records by how
    much they do not.
    """
    if not cache.matches(dataset):
        raise CacheMismatch("tangent cache was not built from this dataset")
    if cache.source is TangentSource.ESTIMATED and autoencoder is None:
        raise CacheMismatch("timing an estimated cache needs its autoencoder")
    spec = spec or SamplingSpec()
    indices = np.arange(len(dataset))
    x_adv = dataset.x + rng.uniform(-epsilon, epsilon, size=dataset.x.shape)

    started = time.perf_counter()
    cached = cache.tangential_components(indices, dataset.x, x_adv)
    cached_seconds = time.perf_counter() - started

    started = time.perf_counter()
    recomputed = np.empty(len(dataset))
    for index in indices:
        example = dataset.example(index)
        if cache.source is TangentSource.EXACT:
            basis = example.tangent_basis
        else:
            basis = estimate_tangent_space(autoencoder, example.x, cache.rank, spec)
        entry = projector_factors(basis)
        recomputed[index] = tangential_component(entry, example.x, x_adv[index])
    recomputed_seconds = time.perf_counter() - started

    return TimingReport(
        examples=len(dataset),
        cached_seconds=cached_seconds,
        recomputed_seconds=recomputed_seconds,
        max_difference=float(np.max(np.abs(cached - recomputed))),
    )
