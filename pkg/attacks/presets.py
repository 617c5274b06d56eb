"""Attack configurations and the named presets used for training and evaluation."""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

PRESETS: Dict[str, Tuple[int, float, bool]] = {
    # name: (steps, step size as a fraction of ε, random start)
    "train-pgd10": (10, 1 / 4, True),
    "eval-pgd20": (20, 1 / 10, True),
    "eval-pgd40": (40, 1 / 10, True),
    "fgsm": (1, 1.0, False),
}


@dataclass(frozen=True)
class AttackConfig:
    """l∞ attack: ``steps`` sign-gradient steps of ``step_size`` inside B∞(x, ε).

    ``clip`` optionally bounds every coordinate to [lo, hi]. ``restarts``
    repeats the attack and keeps, per example, the run with the highest loss.
    """

    epsilon: float
    steps: int
    step_size: float = 0.0
    random_start: bool = False
    clip: Optional[Tuple[float, float]] = None
    restarts: int = 1

    def __post_init__(self: "AttackConfig") -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.steps < 0:
            raise ValueError(f"steps must be nonnegative, got {self.steps}")
        if self.steps > 0 and self.step_size <= 0:
            raise ValueError("step_size must be positive when steps > 0")
        if self.restarts < 1:
            raise ValueError(f"restarts must be at least 1, got {self.restarts}")
        if self.clip is not None and self.clip[0] > self.clip[1]:
            raise ValueError(f"clip bounds {self.clip} are inverted")

    @property
    def is_noop(self: "AttackConfig") -> bool:
        """True when the attack always returns its input unchanged."""
        return self.epsilon == 0 or (self.steps == 0 and not self.random_start)


def from_preset(
    name: str,
    epsilon: float,
    clip: Optional[Tuple[float, float]] = None,
    restarts: int = 1,
) -> AttackConfig:
    """Build the named preset at ``epsilon``; ε = 0 yields an attack with no steps."""
    if name not in PRESETS:
        raise ValueError(f"unknown attack preset {name!r}; choose from {sorted(PRESETS)}")
    steps, fraction, random_start = PRESETS[name]
    if epsilon == 0:
        return AttackConfig(epsilon=0.0, steps=0, clip=clip, restarts=1)
    return AttackConfig(
        epsilon=epsilon,
        steps=steps,
        step_size=epsilon * fraction,
        random_start=random_start,
        clip=clip,
        restarts=restarts,
    )
