"""Compare two budget rules over a grid of hemisphere geometries."""

from typing import Any

from django.core.management.base import CommandError, CommandParser
from rest_framework import serializers

from core.exceptions import TartError
from experiments.grid import SMALL_BUDGET_CELLS, GridCell, clean_wins, run_grid
from experiments.management.base import RUNTIME_ERROR, VALIDATION_ERROR, StageCommand
from training.rules import RuleKind

DEFAULT_RULES = ["quartile", "reverse-quartile"]


class Command(StageCommand):
    help = (
        "Train two budget rules on every (d, c, eps) cell and count the cells where "
        "the first has the higher clean accuracy."
    )

    def add_arguments(self: "Command", parser: CommandParser) -> None:
        parser.add_argument("config", help="Path to the YAML document every cell starts from.")
        parser.add_argument(
            "--cell",
            action="append",
            dest="cells",
            help="d,c,eps (repeatable). Defaults to the nine smaller-budget cells.",
        )
        parser.add_argument(
            "--rule",
            action="append",
            dest="rules",
            choices=[kind.value for kind in RuleKind],
            help=f"Give twice to pick the pair to compare (default {DEFAULT_RULES}).",
        )

    def handle(self: "Command", *args: Any, **options: Any) -> None:
        config = self.load(options["config"])
        rules = options.get("rules") or DEFAULT_RULES
        if len(rules) != 2 or rules[0] == rules[1]:
            raise CommandError(
                "--rule takes exactly two distinct rules", returncode=VALIDATION_ERROR
            )
        try:
            cells = [GridCell.parse(text) for text in options.get("cells") or []]
        except ValueError as error:
            raise CommandError(str(error), returncode=VALIDATION_ERROR) from error
        cells = cells or list(SMALL_BUDGET_CELLS)
        try:
            frame = run_grid(config, cells, rules)
        except serializers.ValidationError as error:
            raise CommandError(
                f"invalid grid cell: {error.detail}", returncode=VALIDATION_ERROR
            ) from error
        except (TartError, OSError) as error:
            raise CommandError(str(error), returncode=RUNTIME_ERROR) from error

        robust = [column for column in frame.columns if column.startswith("robust_")]
        for row in frame.to_dict(orient="records"):
            parts = [f"clean {100 * row['clean_last']:6.2f}"]
            parts += [f"{name[len('robust_'):]} {100 * row[name]:6.2f}" for name in robust]
            self.stdout.write(
                f"d={row['ambient_dim']} c={row['num_classes']} "
                f"eps={row['epsilon']:g} {row['rule']}: " + "  ".join(parts)
            )
        wins = clean_wins(frame, *rules)
        self.stdout.write(
            self.style.SUCCESS(
                f"{rules[0]} clean accuracy above {rules[1]} in {wins}/{len(cells)} cells"
            )
        )
