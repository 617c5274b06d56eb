"""Re-evaluate trained seeds."""

from typing import Any, Dict, List

from experiments.config import ExperimentConfig
from experiments.management.base import StageCommand


class Command(StageCommand):
    help = "Evaluate the saved checkpoints of each seed under every evaluation preset."
    stage = "eval"

    def report(
        self: "Command", config: ExperimentConfig, reports: List[Dict[str, Any]]
    ) -> None:
        self.write_accuracies(config, reports)
