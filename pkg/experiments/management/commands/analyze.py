"""Write plot-ready tables for trained seeds."""

from typing import Any, Dict, List

from experiments.config import ExperimentConfig
from experiments.management.base import StageCommand


class Command(StageCommand):
    help = (
        "Write TC and angle histograms, loss-vs-TC points and decision-boundary "
        "slices of each trained seed."
    )
    stage = "analyze"

    def report(
        self: "Command", config: ExperimentConfig, reports: List[Dict[str, Any]]
    ) -> None:
        for report in reports:
            self.stdout.write(
                f"seed {report['seed']}: loss/TC correlation {report['correlation']:.4f}"
            )
            for row in report["geometry"]:
                self.stdout.write(
                    f"  {row['quantity']}: min {row['min']:.4g} "
                    f"mean {row['mean']:.4g} max {row['max']:.4g}"
                )
