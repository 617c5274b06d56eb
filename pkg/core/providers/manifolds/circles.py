"""Two noisy concentric circles in ℝ³ separated along x₃ (the margin toy problem)."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from core.datasets import DatasetSplit, ManifoldDataset

from .base import BaseManifoldProvider


@dataclass(frozen=True)
class CirclesConfig:
    """Geometry of the toy problem; defaults reproduce the x₃ = 0.85 slice."""

    n_per_class: int = 500
    test_per_class: int = 500
    radius_inner: float = 1.0
    radius_outer: float = 2.0
    gap: float = 0.85
    noise_std: float = 0.05
    seed: int = 0

    def __post_init__(self: "CirclesConfig") -> None:
        """Reject inconsistent geometry."""
        if not 0 < self.radius_inner < self.radius_outer:
            raise ValueError("need 0 < radius_inner < radius_outer")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.n_per_class < 1 or self.test_per_class < 1:
            raise ValueError("class sizes must be positive")


class CirclesProvider(BaseManifoldProvider):
    """Class 0 on the inner circle at x₃ = +h, class 1 on the outer circle at x₃ = −h."""

    def __init__(self: "CirclesProvider", config: CirclesConfig) -> None:
        """Keep the config; the seed comes from it."""
        super().__init__(config.seed)
        self.config = config

    def split_sizes(self: "CirclesProvider") -> Sequence[int]:
        """Per-class counts for the train and test sets."""
        return self.config.n_per_class, self.config.test_per_class

    def sample(
        self: "CirclesProvider", count: int, rng: np.random.Generator
    ) -> ManifoldDataset:
        """Draw ``count`` points per class; tangents are the circle directions."""
        config = self.config
        angles = rng.uniform(0.0, 2 * np.pi, size=2 * count)
        labels = np.repeat(np.array([0, 1], dtype=np.int64), count)
        radius = np.where(labels == 0, config.radius_inner, config.radius_outer)
        height = np.where(labels == 0, config.gap, -config.gap)
        x = np.column_stack(
            (radius * np.cos(angles), radius * np.sin(angles), height)
        )
        if config.noise_std > 0:
            x = x + rng.normal(0.0, config.noise_std, size=x.shape)
        tangents = np.column_stack(
            (-np.sin(angles), np.cos(angles), np.zeros_like(angles))
        )[:, :, np.newaxis]
        return ManifoldDataset(
            x=x,
            labels=labels,
            num_classes=2,
            latents=angles[:, np.newaxis],
            tangents=tangents,
        )


def sample_concentric_circles(config: CirclesConfig) -> DatasetSplit:
    """Generate the train/test split of the concentric-circles toy problem."""
    return CirclesProvider(config).generate()
