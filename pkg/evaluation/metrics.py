"""Clean and robust accuracy, per-seed records and their aggregation."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from attacks.pgd import pgd
from attacks.presets import AttackConfig
from core.datasets import ManifoldDataset
from core.exceptions import EmptyBatch
from network.mlp import MlpClassifier

EVAL_BATCH = 512


def predict(model: MlpClassifier, x: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the lowest index."""
    return np.argmax(np.atleast_2d(model.forward(x)), axis=1)


def clean_accuracy(model: MlpClassifier, dataset: ManifoldDataset) -> float:
    """Fraction of examples whose argmax logit is the label."""
    if len(dataset) == 0:
        raise EmptyBatch("accuracy of an empty dataset")
    return float(np.mean(predict(model, dataset.x) == dataset.labels))


def robust_accuracy(
    model: MlpClassifier,
    dataset: ManifoldDataset,
    attack: AttackConfig,
    rng: Optional[np.random.Generator] = None,
    batch_size: int = EVAL_BATCH,
) -> float:
    """Fraction still classified correctly after a per-example attack."""
    if attack.is_noop:
        return clean_accuracy(model, dataset)
    correct = 0
    for start in range(0, len(dataset), batch_size):
        x = dataset.x[start : start + batch_size]
        y = dataset.labels[start : start + batch_size]
        correct += int(np.sum(predict(model, pgd(model, x, y, attack, rng)) == y))
    return correct / len(dataset)


@dataclass
class MetricsRecord:
    """Final accuracies of one seed."""

    seed: int
    clean_last: float
    clean_best: float
    robust: Dict[str, float] = field(default_factory=dict)

    def as_row(self: "MetricsRecord") -> Dict[str, float]:
        """One CSV row: seed, clean accuracies and one column per attack."""
        row = {"seed": self.seed, "clean_last": self.clean_last, "clean_best": self.clean_best}
        row.update({f"robust_{name}": value for name, value in self.robust.items()})
        return row


def aggregate(records: Sequence[MetricsRecord]) -> Dict[str, Dict[str, float]]:
    """Mean and sample standard deviation (ddof=1; 0 for a single seed) per metric."""
    if not records:
        raise EmptyBatch("nothing to aggregate")
    frame = pd.DataFrame([record.as_row() for record in records]).drop(columns="seed")
    summary = {}
    for column in frame.columns:
        values = frame[column].to_numpy(dtype=np.float64)
        summary[column] = {
            "mean": float(np.mean(values)),
            "std": float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
        }
    return summary


def records_frame(records: List[MetricsRecord]) -> pd.DataFrame:
    """One row per seed."""
    return pd.DataFrame([record.as_row() for record in records])
