"""Per-example perturbation budgets from tangential-component ranks."""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from core.exceptions import EmptyBatch


class RuleKind(str, Enum):
    """Budget policies; the reverse kinds swap the ε_max and 0 groups."""

    FIXED = "fixed"
    MEDIAN = "median"
    QUARTILE = "quartile"
    REVERSE_MEDIAN = "reverse-median"
    REVERSE_QUARTILE = "reverse-quartile"


@dataclass(frozen=True)
class AssignmentRule:
    kind: RuleKind
    epsilon: float

    def __post_init__(self: "AssignmentRule") -> None:
        """Coerce the kind and reject a negative budget."""
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")

    @property
    def needs_tangents(self: "AssignmentRule") -> bool:
        """Whether the rule ranks examples by tangential component."""
        return self.kind is not RuleKind.FIXED

    @property
    def reverse(self: "AssignmentRule") -> bool:
        """Whether the ε_max and 0 groups are swapped."""
        return self.kind in (RuleKind.REVERSE_MEDIAN, RuleKind.REVERSE_QUARTILE)


def quartile_count(batch_size: int) -> int:
    """Examples in each of the top and bottom groups of a quartile split."""
    return max(1, batch_size // 4)


def assign_epsilons(tcs: np.ndarray, rule: AssignmentRule) -> Tuple[np.ndarray, np.ndarray]:
    """Budget and usage mask for each example of a batch.

    Median split: ε_max where TC ≥ median (even batches use the mean of the
    two middle values). Quartile split: ε_max for the top quarter by TC, 0 for
    the bottom quarter, and the middle half is left out of the batch. Both
    quartile cuts are value thresholds, so tied components always share a
    group: a tie straddling a cut joins that outer group, and when the two
    groups meet the top one wins. Reverse kinds give 0 to the group that would
    get ε_max and vice versa.

    Returns:
        (epsilons, used) arrays aligned with ``tcs``; unused examples carry 0.
    """
    tcs = np.asarray(tcs, dtype=np.float64).reshape(-1)
    if tcs.size == 0:
        raise EmptyBatch("cannot assign budgets to an empty batch")
    size = tcs.size
    used = np.ones(size, dtype=bool)
    if rule.kind is RuleKind.FIXED:
        return np.full(size, rule.epsilon), used
    if rule.kind in (RuleKind.MEDIAN, RuleKind.REVERSE_MEDIAN):
        high = tcs >= np.median(tcs)
    else:
        ranked = np.sort(tcs)
        count = quartile_count(size)
        high = tcs >= ranked[-count]
        used = high | (tcs <= ranked[count - 1])
    granted = ~high if rule.reverse else high
    epsilons = np.where(granted & used, rule.epsilon, 0.0)
    return epsilons, used
