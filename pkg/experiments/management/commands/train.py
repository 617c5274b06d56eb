"""Train every seed, then evaluate and aggregate."""

from typing import Any, Dict, List

from experiments.config import ExperimentConfig
from experiments.management.base import StageCommand


class Command(StageCommand):
    help = (
        "Train the classifier of each seed, building missing data, autoencoder and "
        "tangent cache first, then report clean and robust accuracy."
    )
    stage = "train"

    def report(
        self: "Command", config: ExperimentConfig, reports: List[Dict[str, Any]]
    ) -> None:
        self.write_accuracies(config, reports)
