"""Shared plumbing of the experiment management commands."""

import logging
from typing import Any, Dict, List

from django.core.management.base import BaseCommand, CommandError, CommandParser
from rest_framework import serializers

from core.exceptions import TartError
from experiments.config import ExperimentConfig, load_config
from experiments.pipeline import summarize_experiment
from experiments.reports import accuracy_lines
from experiments.tasks import dispatch

logger = logging.getLogger(__name__)

VALIDATION_ERROR = 1
RUNTIME_ERROR = 2


class StageCommand(BaseCommand):
    """Run one pipeline stage for the seeds of an experiment document.

    Subclasses set ``stage`` and print their reports in ``report``.
    """

    stage = ""

    def add_arguments(self: "StageCommand", parser: CommandParser) -> None:
        parser.add_argument("config", help="Path to a YAML experiment document.")
        parser.add_argument(
            "--seed",
            action="append",
            type=int,
            dest="seeds",
            help="Only run this seed (repeatable). Must be listed in the document.",
        )

    def handle(self: "StageCommand", *args: Any, **options: Any) -> None:
        config = self.load(options["config"])
        seeds = options.get("seeds") or config.seeds
        unknown = sorted(set(seeds) - set(config.seeds))
        if unknown:
            raise CommandError(
                f"seeds {unknown} are not listed in the document", returncode=VALIDATION_ERROR
            )
        try:
            resolved = config.write_resolved()
            logger.info("resolved config written to %s", resolved)
            reports = dispatch(config, self.stage, seeds)
            self.report(config, reports)
        except (TartError, OSError) as error:
            raise CommandError(str(error), returncode=RUNTIME_ERROR) from error

    def load(self: "StageCommand", path: str) -> ExperimentConfig:
        try:
            return load_config(path)
        except serializers.ValidationError as error:
            raise CommandError(
                f"invalid experiment document: {error.detail}", returncode=VALIDATION_ERROR
            ) from error
        except OSError as error:
            raise CommandError(str(error), returncode=RUNTIME_ERROR) from error

    def report(
        self: "StageCommand", config: ExperimentConfig, reports: List[Dict[str, Any]]
    ) -> None:
        for report in reports:
            self.stdout.write(f"seed {report['seed']}: {report}")

    def write_accuracies(
        self: "StageCommand", config: ExperimentConfig, reports: List[Dict[str, Any]]
    ) -> None:
        """Aggregate accuracy rows into the run summary and print mean ± std."""
        summary = summarize_experiment(config, reports)
        self.stdout.write(
            f"{config.name}: {len(reports)} seed(s), accuracy in % (mean ± std)"
        )
        for line in accuracy_lines(summary["aggregate"]):
            self.stdout.write(line)
        self.stdout.write(self.style.SUCCESS(f"summary written to {config.output_dir}"))
