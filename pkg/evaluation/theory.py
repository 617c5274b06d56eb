"""Total variation distance and the risk-gap bound on finite supports.

For a binary labelling h, classifier f and the mean absolute loss, the risks
under P and Q differ by at most 4·TV(P, Q). Since the loss takes values in
{0, 1}, 2·TV is also a bound; both are reported.
"""

from dataclasses import dataclass

import numpy as np

from core.exceptions import InvalidDistribution

TOLERANCE = 1e-12


def _distribution(values: np.ndarray, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1 or array.size == 0:
        raise InvalidDistribution(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(array)) or np.any(array < 0):
        raise InvalidDistribution(f"{name} has negative or non-finite entries")
    if abs(array.sum() - 1.0) > TOLERANCE:
        raise InvalidDistribution(f"{name} sums to {array.sum():.15g}, not 1")
    return array


def _binary(values: np.ndarray, name: str, size: int) -> np.ndarray:
    array = np.asarray(values, dtype=np.int64)
    if array.shape != (size,) or not np.all((array == 0) | (array == 1)):
        raise InvalidDistribution(f"{name} must assign 0 or 1 to each of {size} points")
    return array


@dataclass(frozen=True)
class DiscreteDistributionPair:
    """Two distributions on the same m points, a true labelling h and a classifier f."""

    p: np.ndarray
    q: np.ndarray
    h: np.ndarray
    f: np.ndarray

    def __post_init__(self: "DiscreteDistributionPair") -> None:
        """Validate both distributions and both labelings."""
        p = _distribution(self.p, "p")
        q = _distribution(self.q, "q")
        if p.shape != q.shape:
            raise InvalidDistribution(f"p has {p.size} points, q has {q.size}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "h", _binary(self.h, "h", p.size))
        object.__setattr__(self, "f", _binary(self.f, "f", p.size))

    @classmethod
    def random(cls: type, rng: np.random.Generator, support: int) -> "DiscreteDistributionPair":
        """Dirichlet-distributed p and q with uniformly random labellings."""
        return cls(
            p=rng.dirichlet(np.ones(support)),
            q=rng.dirichlet(np.ones(support)),
            h=rng.integers(0, 2, size=support),
            f=rng.integers(0, 2, size=support),
        )


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """½ Σ|pᵢ − qᵢ|."""
    p = _distribution(p, "p")
    q = _distribution(q, "q")
    if p.shape != q.shape:
        raise InvalidDistribution(f"p has {p.size} points, q has {q.size}")
    return float(0.5 * np.sum(np.abs(p - q)))


@dataclass(frozen=True)
class RiskGap:
    risk_p: float
    risk_q: float
    gap: float
    bound: float
    holds: bool
    tight_bound: float
    tight_holds: bool


def risk_gap_check(pair: DiscreteDistributionPair) -> RiskGap:
    """|R_P(f) − R_Q(f)| against 4·TV(P, Q) and against 2·TV(P, Q)."""
    loss = np.abs(pair.f - pair.h).astype(np.float64)
    risk_p = float(np.dot(pair.p, loss))
    risk_q = float(np.dot(pair.q, loss))
    gap = abs(risk_p - risk_q)
    tv = tv_distance(pair.p, pair.q)
    return RiskGap(
        risk_p=risk_p,
        risk_q=risk_q,
        gap=gap,
        bound=4 * tv,
        holds=gap <= 4 * tv + TOLERANCE,
        tight_bound=2 * tv,
        tight_holds=gap <= 2 * tv + TOLERANCE,
    )
