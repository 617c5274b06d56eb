"""Fit the autoencoder used for tangent estimation."""

from typing import Any, Dict, List

from experiments.config import ExperimentConfig
from experiments.management.base import StageCommand


class Command(StageCommand):
    help = "Train the autoencoder of each seed on its training inputs."
    stage = "train_ae"

    def report(
        self: "Command", config: ExperimentConfig, reports: List[Dict[str, Any]]
    ) -> None:
        for report in reports:
            self.stdout.write(
                f"seed {report['seed']}: reconstruction loss "
                f"{report['initial_loss']:.6g} -> {report['final_loss']:.6g}"
            )
