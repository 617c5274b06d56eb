"""Sample the train and test sets of every seed."""

from typing import Any, Dict, List

from experiments.config import ExperimentConfig
from experiments.management.base import StageCommand
from experiments.reports import histogram_lines


class Command(StageCommand):
    help = "Generate the TADS train/test files of each seed of an experiment."
    stage = "gen_data"

    def report(
        self: "Command", config: ExperimentConfig, reports: List[Dict[str, Any]]
    ) -> None:
        for report in reports:
            self.stdout.write(
                f"seed {report['seed']}: n={report['n_train']} (test {report['n_test']}) "
                f"d={report['dim']} c={report['num_classes']} sha256={report['sha256']}"
            )
            labels = [f"class {label}" for label in range(report["num_classes"])]
            for line in histogram_lines(report["histogram"], labels):
                self.stdout.write(line)
