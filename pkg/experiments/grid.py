"""Two budget rules trained side by side over a grid of hemisphere geometries."""

import copy
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import pandas as pd

from experiments.config import ExperimentConfig, parse_config
from experiments.pipeline import summarize_experiment
from experiments.reports import write_table
from experiments.tasks import dispatch

logger = logging.getLogger(__name__)

GRID_TABLE = "grid.csv"


@dataclass(frozen=True)
class GridCell:
    """One hemisphere geometry and the budget it is trained and attacked at."""

    ambient_dim: int
    num_classes: int
    epsilon: float

    @property
    def label(self: "GridCell") -> str:
        """Directory-safe name, e.g. ``d100-c4-eps0.03``."""
        return f"d{self.ambient_dim}-c{self.num_classes}-eps{self.epsilon:g}"

    @classmethod
    def parse(cls: type, text: str) -> "GridCell":
        """Parse ``d,c,eps`` such as ``100,4,0.03``."""
        try:
            ambient_dim, num_classes, epsilon = text.split(",")
            return cls(int(ambient_dim), int(num_classes), float(epsilon))
        except ValueError as error:
            raise ValueError(f"grid cell {text!r} is not of the form d,c,eps") from error


# The smaller of the two budgets reported for each (d, c) pair.
SMALL_BUDGET_CELLS = (
    GridCell(100, 4, 0.03),
    GridCell(100, 8, 0.03),
    GridCell(100, 16, 0.01),
    GridCell(200, 4, 0.03),
    GridCell(200, 8, 0.03),
    GridCell(200, 16, 0.01),
    GridCell(400, 4, 0.03),
    GridCell(400, 8, 0.01),
    GridCell(400, 16, 0.01),
)


def cell_config(base: ExperimentConfig, cell: GridCell, rule: str) -> ExperimentConfig:
    """``base`` moved to ``cell`` and trained with ``rule``, in a subdirectory of its own."""
    data = copy.deepcopy(base.data)
    name = f"{cell.label}-{rule}"
    data["name"] = name
    data["output_dir"] = str(base.output_dir / name)
    data["dataset"].update(
        kind="hemisphere", ambient_dim=cell.ambient_dim, num_classes=cell.num_classes
    )
    data["attack"]["epsilon"] = cell.epsilon
    data["training"].update(method="tart", rule=rule)
    return parse_config(data)


def run_grid(
    base: ExperimentConfig, cells: Sequence[GridCell], rules: Sequence[str]
) -> pd.DataFrame:
    """Train every (cell, rule) pair over the base document's seeds.

    Returns one row per pair with the mean clean and robust accuracies, and
    writes the same table to ``grid.csv`` in the base run directory.
    """
    rows: List[Dict[str, Any]] = []
    for cell in cells:
        for rule in rules:
            config = cell_config(base, cell, rule)
            config.write_resolved()
            summary = summarize_experiment(config, dispatch(config, "train"))
            row: Dict[str, Any] = {
                "ambient_dim": cell.ambient_dim,
                "num_classes": cell.num_classes,
                "epsilon": cell.epsilon,
                "rule": rule,
            }
            row.update({key: stats["mean"] for key, stats in summary["aggregate"].items()})
            logger.info("grid %s %s: clean %.4f", cell.label, rule, row["clean_last"])
            rows.append(row)
    frame = pd.DataFrame(rows)
    base.output_dir.mkdir(parents=True, exist_ok=True)
    write_table(frame, base.output_dir / GRID_TABLE)
    return frame


def clean_wins(frame: pd.DataFrame, rule: str, other: str) -> int:
    """Cells where ``rule`` has a strictly higher mean last-epoch clean accuracy than ``other``."""
    pivot = frame.pivot_table(
        index=["ambient_dim", "num_classes", "epsilon"], columns="rule", values="clean_last"
    )
    return int((pivot[rule] > pivot[other]).sum())
