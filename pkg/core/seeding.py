"""Deterministic random substreams keyed by (seed, *key)."""

from typing import Sequence, Union

import numpy as np

Seed = Union[int, Sequence[int]]


def derive_rng(seed: Seed, *key: int) -> np.random.Generator:
    """Independent generator for the substream (seed, *key)."""
    entropy = [int(s) for s in seed] if isinstance(seed, (list, tuple)) else [int(seed)]
    return np.random.default_rng(np.random.SeedSequence(entropy + [int(k) for k in key]))
