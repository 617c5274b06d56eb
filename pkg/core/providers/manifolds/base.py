"""Base class for synthetic manifold dataset providers."""

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from core.datasets import DatasetSplit, ManifoldDataset
from core.seeding import derive_rng

TRAIN_STREAM = 1
TEST_STREAM = 2


class BaseManifoldProvider(ABC):
    """Abstract base class for generators with exact tangent ground truth."""

    def __init__(self: "BaseManifoldProvider", seed: int) -> None:
        """Initialize the provider with the trial seed."""
        self.seed = seed

    def stream(self: "BaseManifoldProvider", *key: int) -> np.random.Generator:
        """Deterministic generator for one substream of this provider."""
        return derive_rng(self.seed, *key)

    @abstractmethod
    def sample(
        self: "BaseManifoldProvider", count: int, rng: np.random.Generator
    ) -> ManifoldDataset:
        """
        Draw ``count`` labelled points from the manifold.

        Args:
            count: Number of examples (per the provider's own convention).
            rng: Generator owned by the calling split.

        Returns:
            A dataset carrying exact tangents and latent coordinates.
        """
        pass

    @abstractmethod
    def split_sizes(self: "BaseManifoldProvider") -> Sequence[int]:
        """Return the (train, test) counts passed to :meth:`sample`."""
        pass

    def generate(self: "BaseManifoldProvider") -> DatasetSplit:
        """Draw the train and test sets from independent substreams."""
        train_count, test_count = self.split_sizes()
        return DatasetSplit(
            train=self.sample(train_count, self.stream(TRAIN_STREAM)),
            test=self.sample(test_count, self.stream(TEST_STREAM)),
        )
