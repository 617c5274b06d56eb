"""Trained-model analysis: loss against tangential component, perturbation
geometry, and decision-boundary slices."""

import logging
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from attacks.pgd import pgd
from attacks.presets import AttackConfig
from core.datasets import ManifoldDataset
from core.exceptions import CacheMismatch, DimensionMismatch, EmptyBatch
from core.seeding import derive_rng
from evaluation.metrics import predict
from network.mlp import MlpClassifier, cross_entropy
from tangent.cache import TangentCache
from tangent.estimation import angles_from_components

logger = logging.getLogger(__name__)

BATCH_STREAM = 4
GEOMETRY_STREAM = 5


@dataclass(frozen=True)
class LossTcReport:
    table: pd.DataFrame
    correlation: float


def _require_alignment(cache: TangentCache, dataset: ManifoldDataset) -> None:
    if not cache.matches(dataset):
        raise CacheMismatch("tangent cache was not built from this dataset")


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if a.size < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


def loss_vs_tc_batches(
    model: MlpClassifier,
    dataset: ManifoldDataset,
    cache: TangentCache,
    attack: AttackConfig,
    batches: Sequence[np.ndarray],
    seed: int = 0,
) -> LossTcReport:
    """Mean TC and mean adversarial loss of each given batch of indices.

    The attack randomness of a batch depends only on (seed, indices), so a
    repeated batch yields a repeated row.
    """
    _require_alignment(cache, dataset)
    if not batches:
        raise EmptyBatch("no batches to analyse")
    rows = []
    for number, indices in enumerate(batches):
        indices = np.asarray(indices, dtype=np.int64)
        x, y = dataset.x[indices], dataset.labels[indices]
        x_adv = pgd(model, x, y, attack, derive_rng(seed, *indices.tolist()))
        tcs = cache.tangential_components(indices, x, x_adv)
        rows.append(
            {
                "batch": number,
                "mean_tc": float(tcs.mean()),
                "loss": float(np.mean(cross_entropy(model.forward(x_adv), y))),
            }
        )
    table = pd.DataFrame(rows, columns=["batch", "mean_tc", "loss"])
    correlation = _pearson(table["mean_tc"].to_numpy(), table["loss"].to_numpy())
    logger.info("loss vs TC over %d batches: correlation %.4f", len(rows), correlation)
    return LossTcReport(table=table, correlation=correlation)


def loss_vs_tc(
    model: MlpClassifier,
    dataset: ManifoldDataset,
    cache: TangentCache,
    attack: AttackConfig,
    num_batches: int,
    batch_size: int = 128,
    seed: int = 0,
) -> LossTcReport:
    """:func:`loss_vs_tc_batches` over ``num_batches`` random batches without replacement."""
    size = min(batch_size, len(dataset))
    batches = [
        derive_rng(seed, BATCH_STREAM, number).choice(len(dataset), size=size, replace=False)
        for number in range(num_batches)
    ]
    return loss_vs_tc_batches(model, dataset, cache, attack, batches, seed=seed)


@dataclass(frozen=True)
class PerturbationGeometry:
    """Per-example TC and angle of adversarial perturbations."""

    tcs: np.ndarray
    angles: np.ndarray

    def summary(self: "PerturbationGeometry") -> pd.DataFrame:
        """Min, mean and max of the TCs and the angles."""
        values = {"tc": self.tcs, "angle_deg": self.angles}
        return pd.DataFrame(
            [
                {
                    "quantity": name,
                    "min": float(v.min()),
                    "mean": float(v.mean()),
                    "max": float(v.max()),
                }
                for name, v in values.items()
            ]
        )


def perturbation_geometry(
    model: MlpClassifier,
    dataset: ManifoldDataset,
    cache: TangentCache,
    attack: AttackConfig,
    seed: int = 0,
    batch_size: int = 512,
) -> PerturbationGeometry:
    """Attack every example once; zero perturbations are left out."""
    _require_alignment(cache, dataset)
    tcs: List[np.ndarray] = []
    norms: List[np.ndarray] = []
    for start in range(0, len(dataset), batch_size):
        indices = np.arange(start, min(start + batch_size, len(dataset)))
        x, y = dataset.x[indices], dataset.labels[indices]
        x_adv = pgd(model, x, y, attack, derive_rng(seed, GEOMETRY_STREAM, start))
        tcs.append(cache.tangential_components(indices, x, x_adv))
        norms.append(np.linalg.norm(x_adv - x, axis=1))
    tc = np.concatenate(tcs)
    norm = np.concatenate(norms)
    keep = norm > 0
    if not keep.any():
        raise EmptyBatch("every perturbation was zero")
    return PerturbationGeometry(tcs=tc[keep], angles=angles_from_components(tc[keep], norm[keep]))


def histogram(
    values: np.ndarray, bins: int, value_range: Optional[Sequence[float]] = None
) -> pd.DataFrame:
    """Bin edges and counts as a table."""
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    return pd.DataFrame({"left": edges[:-1], "right": edges[1:], "count": counts})


_SLICE = re.compile(r"^x([123])\s*=\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)$")


@dataclass(frozen=True)
class SlicePlane:
    """The plane x_axis = value of the latent ℝ³ (axis is 0-based)."""

    axis: int
    value: float

    @classmethod
    def parse(cls: type, text: str) -> "SlicePlane":
        """Parse ``x3=0.85``-style text."""
        match = _SLICE.match(text.strip())
        if match is None:
            raise ValueError(f"slice {text!r} is not of the form x<1|2|3>=<number>")
        return cls(axis=int(match.group(1)) - 1, value=float(match.group(2)))

    @property
    def label(self: "SlicePlane") -> str:
        """Text form, e.g. ``x3=0.85``."""
        return f"x{self.axis + 1}={self.value:g}"


def decision_grid(
    model: MlpClassifier,
    plane: SlicePlane,
    resolution: int = 200,
    extent: float = 2.5,
    frame: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """Predictions on a resolution×resolution grid over [−extent, extent]² in ``plane``.

    Grid points live in the 3-D latent space; ``frame`` (d×3) embeds them in
    the model's input space when d > 3.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    axis = np.linspace(-extent, extent, resolution)
    u, v = np.meshgrid(axis, axis, indexing="ij")
    free = [a for a in range(3) if a != plane.axis]
    points = np.empty((resolution * resolution, 3))
    points[:, plane.axis] = plane.value
    points[:, free[0]] = u.ravel()
    points[:, free[1]] = v.ravel()
    inputs = points if frame is None else points @ np.asarray(frame).T
    if inputs.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"slice points have {inputs.shape[1]} coordinates, model expects {model.input_dim}"
        )
    return pd.DataFrame({"u": u.ravel(), "v": v.ravel(), "prediction": predict(model, inputs)})
