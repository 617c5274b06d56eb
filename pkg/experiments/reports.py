"""CSV/JSON writers and the text summaries printed by the commands."""

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Union

import pandas as pd

# %.17g round-trips every float64.
FLOAT_FORMAT = "%.17g"


def write_table(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_table(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def _clean(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Mapping):
        return {key: _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    return value


def write_json(payload: Mapping[str, Any], path: Union[str, Path]) -> Path:
    """JSON with NaN written as null."""
    path = Path(path)
    path.write_text(json.dumps(_clean(payload), indent=2) + "\n")
    return path


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    return json.loads(Path(path).read_text())


def histogram_lines(counts: Iterable[int], labels: Iterable[str]) -> List[str]:
    """One ``label: count`` line per bin."""
    return [f"  {label}: {count}" for label, count in zip(labels, counts)]


def accuracy_lines(aggregate: Mapping[str, Mapping[str, float]]) -> List[str]:
    """``metric  mean ± std`` in percent."""
    width = max((len(name) for name in aggregate), default=0)
    return [
        f"  {name.ljust(width)}  {100 * stats['mean']:6.2f} ± {100 * stats['std']:5.2f}"
        for name, stats in aggregate.items()
    ]
