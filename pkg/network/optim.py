"""SGD with momentum, L2 weight decay on weights and a stepped learning rate."""

from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from core.exceptions import DimensionMismatch


class Parameterized(Protocol):
    """Anything exposing live parameter arrays by name."""

    def named_parameters(self) -> List[Tuple[str, np.ndarray]]:
        ...


@dataclass
class SgdState:
    """Optimizer hyperparameters plus the velocity buffers (created on first step).

    ``schedule`` holds (epoch, divisor) pairs; from each listed epoch on the
    learning rate is divided by the divisor, and divisors compound.
    """

    learning_rate: float
    momentum: float = 0.0
    weight_decay: float = 0.0
    schedule: Tuple[Tuple[int, float], ...] = ()
    velocity: Optional[List[np.ndarray]] = None

    def __post_init__(self: "SgdState") -> None:
        """Validate hyperparameters and normalize the schedule."""
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be nonnegative, got {self.weight_decay}")
        self.schedule = tuple((int(epoch), float(divisor)) for epoch, divisor in self.schedule)
        if any(divisor <= 0 for _, divisor in self.schedule):
            raise ValueError("schedule divisors must be positive")

    def fresh(self: "SgdState") -> "SgdState":
        """Same hyperparameters, no velocity."""
        return SgdState(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            schedule=self.schedule,
        )


def milestone_schedule(milestones: Sequence[int], divisor: float) -> Tuple[Tuple[int, float], ...]:
    """Schedule dividing by the same ``divisor`` at every milestone epoch."""
    return tuple((int(epoch), float(divisor)) for epoch in milestones)


def lr_at_epoch(state: SgdState, epoch: int) -> float:
    """Learning rate in force during the 0-based ``epoch``."""
    if epoch < 0:
        raise ValueError(f"epoch must be nonnegative, got {epoch}")
    rate = state.learning_rate
    for milestone, divisor in state.schedule:
        if epoch >= milestone:
            rate /= divisor
    return rate


def sgd_step(
    model: Parameterized,
    grads: Sequence[np.ndarray],
    state: SgdState,
    learning_rate: Optional[float] = None,
) -> None:
    """One in-place update: v ← μv + (g + λp) (λ on weights only); p ← p − ηv."""
    named = model.named_parameters()
    if len(grads) != len(named):
        raise DimensionMismatch(f"{len(grads)} gradients for {len(named)} parameters")
    if state.velocity is None:
        state.velocity = [np.zeros_like(array) for _, array in named]
    rate = state.learning_rate if learning_rate is None else learning_rate
    for (name, param), grad, velocity in zip(named, grads, state.velocity):
        if grad.shape != param.shape or velocity.shape != param.shape:
            raise DimensionMismatch(f"{name}: gradient {grad.shape} vs parameter {param.shape}")
        step = grad + state.weight_decay * param if name.endswith("weight") else grad
        velocity *= state.momentum
        velocity += step
        param -= rate * velocity
