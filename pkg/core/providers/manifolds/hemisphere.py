"""Unit hemisphere in ℝ³ embedded in ℝ^d by an orthonormal frame."""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from core.datasets import DatasetSplit, ManifoldDataset
from core.exceptions import DimensionMismatch
from core.linalg import as_vector
from core.seeding import Seed, derive_rng

from .base import BaseManifoldProvider

logger = logging.getLogger(__name__)

FRAME_STREAM = 0


@dataclass(frozen=True)
class HemisphereConfig:
    """Parameters of the transformed-hemisphere dataset."""

    ambient_dim: int = 100
    num_classes: int = 4
    train_size: int = 2000
    test_size: int = 1000
    seed: int = 0

    def __post_init__(self: "HemisphereConfig") -> None:
        """Reject configurations the generator cannot honour."""
        if self.ambient_dim < 3:
            raise ValueError(f"ambient_dim must be at least 3, got {self.ambient_dim}")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be at least 2, got {self.num_classes}")
        if self.train_size < 1 or self.test_size < 1:
            raise ValueError("train_size and test_size must be positive")


def random_orthonormal_frame(d: int, cols: int, seed: Seed) -> np.ndarray:
    """d×cols matrix with orthonormal columns, deterministic in ``seed``."""
    if cols < 1 or cols > d:
        raise DimensionMismatch(f"cannot build {cols} orthonormal columns in dimension {d}")
    gaussian = derive_rng(seed).standard_normal((d, cols))
    q, r = np.linalg.qr(gaussian)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs


def hemisphere_label(z: np.ndarray, num_classes: int) -> int:
    """Index of the azimuthal sector of ``z``: floor(c · azimuth / 2π)."""
    azimuth = np.arctan2(z[1], z[0]) % (2 * np.pi)
    return min(int(np.floor(num_classes * azimuth / (2 * np.pi))), num_classes - 1)


def sphere_tangent_frame(z: np.ndarray) -> np.ndarray:
    """3×2 orthonormal tangent frame of the unit sphere at ``z``.

    The two coordinate axes least aligned with ``z`` are Gram–Schmidt
    orthogonalised against ``z``.
    """
    z = as_vector(z, "z")
    if z.shape != (3,):
        raise DimensionMismatch("sphere tangents need a point in ℝ³")
    dominant = int(np.argmax(np.abs(z)))
    columns = []
    for axis in (a for a in range(3) if a != dominant):
        u = np.eye(3)[axis] - np.dot(np.eye(3)[axis], z) * z
        for previous in columns:
            u = u - np.dot(u, previous) * previous
        columns.append(u / np.linalg.norm(u))
    return np.column_stack(columns)


def exact_tangent(z: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Exact d×2 tangent basis T·[u₁ u₂] of the embedded hemisphere at T·z."""
    return frame @ sphere_tangent_frame(z)


class HemisphereProvider(BaseManifoldProvider):
    """Uniform-by-area samples of the upper unit hemisphere, pushed through T."""

    def __init__(self: "HemisphereProvider", config: HemisphereConfig) -> None:
        """Build the embedding frame for ``config.seed``."""
        super().__init__(config.seed)
        self.config = config
        self.frame = random_orthonormal_frame(
            config.ambient_dim, 3, [config.seed, FRAME_STREAM]
        )

    def split_sizes(self: "HemisphereProvider") -> Sequence[int]:
        """Train and test sizes from the config."""
        return self.config.train_size, self.config.test_size

    def sample(
        self: "HemisphereProvider", count: int, rng: np.random.Generator
    ) -> ManifoldDataset:
        """Draw ``count`` points with z₃ ~ U[0, 1] and azimuth ~ U[0, 2π)."""
        height = rng.uniform(0.0, 1.0, size=count)
        azimuth = rng.uniform(0.0, 2 * np.pi, size=count)
        radius = np.sqrt(1.0 - height**2)
        latents = np.column_stack(
            (radius * np.cos(azimuth), radius * np.sin(azimuth), height)
        )
        labels = np.array(
            [hemisphere_label(z, self.config.num_classes) for z in latents], dtype=np.int64
        )
        tangents = np.stack([exact_tangent(z, self.frame) for z in latents])
        return ManifoldDataset(
            x=latents @ self.frame.T,
            labels=labels,
            num_classes=self.config.num_classes,
            latents=latents,
            tangents=tangents,
            frame=self.frame,
        )


def sample_hemisphere(config: HemisphereConfig) -> DatasetSplit:
    """Generate the train/test split of the transformed hemisphere."""
    split = HemisphereProvider(config).generate()
    logger.info(
        "sampled hemisphere d=%d c=%d train=%d test=%d seed=%d",
        config.ambient_dim,
        config.num_classes,
        len(split.train),
        len(split.test),
        config.seed,
    )
    return split
