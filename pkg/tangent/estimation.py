"""Tangent spaces from a decoder, and the tangential component of a perturbation."""

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from core.exceptions import DimensionMismatch, ZeroPerturbation
from core.linalg import (
    ProjectorFactors,
    as_vector,
    check_full_rank,
    first_principal_component,
    project,
)

TangentEntry = ProjectorFactors


class LatentModel(Protocol):
    """Encoder/decoder pair; ``decode`` must accept a batch of latent rows."""

    def encode(self, x: np.ndarray) -> np.ndarray:
        ...

    def decode(self, z: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class SamplingSpec:
    """Latent stencil: ``samples_per_dim`` offsets spread over [−δ, δ]."""

    samples_per_dim: int = 8
    latent_spread: float = 0.05
    include_center: bool = True

    def __post_init__(self: "SamplingSpec") -> None:
        if self.samples_per_dim < 2:
            raise ValueError(f"samples_per_dim must be at least 2, got {self.samples_per_dim}")
        if self.latent_spread <= 0:
            raise ValueError(f"latent_spread must be positive, got {self.latent_spread}")

    def offsets(self: "SamplingSpec") -> np.ndarray:
        """Equally spaced offsets including both endpoints; the zero offset is dropped."""
        offsets = np.linspace(-self.latent_spread, self.latent_spread, self.samples_per_dim)
        if self.samples_per_dim % 2:
            offsets = np.delete(offsets, self.samples_per_dim // 2)
        return offsets


def estimate_tangent_space(
    ae: LatentModel,
    x: np.ndarray,
    k: Optional[int] = None,
    spec: SamplingSpec = SamplingSpec(),
) -> np.ndarray:
    """d×k basis whose i-th column is the first principal direction of D(z + δⱼeᵢ).

    Raises:
        DimensionMismatch: ``k`` differs from the encoder's latent width.
        DegenerateSamples: the decoder collapses a latent direction.
        RankDeficient: the estimated columns are (nearly) dependent.
    """
    z = as_vector(ae.encode(as_vector(x, "x")), "latent")
    if k is not None and k != z.size:
        raise DimensionMismatch(f"requested k={k} but the latent code has {z.size} entries")
    offsets = spec.offsets()
    columns = []
    for axis in range(z.size):
        latents = np.repeat(z[np.newaxis, :], offsets.size, axis=0)
        latents[:, axis] += offsets
        if spec.include_center:
            latents = np.vstack([z[np.newaxis, :], latents])
        decoded = np.atleast_2d(ae.decode(latents))
        columns.append(first_principal_component(decoded))
    basis = np.column_stack(columns)
    check_full_rank(basis, "estimated tangent basis")
    return basis


def tangential_component(entry: TangentEntry, x: np.ndarray, x_adv: np.ndarray) -> float:
    """‖Π_A(x_adv − x)‖₂."""
    delta = as_vector(x_adv, "x_adv") - as_vector(x, "x")
    return float(np.linalg.norm(project(entry, delta)))


def angle_degrees(entry: TangentEntry, x: np.ndarray, x_adv: np.ndarray) -> float:
    """Angle between the perturbation and the tangent space, in [0, 90]."""
    delta = as_vector(x_adv, "x_adv") - as_vector(x, "x")
    norm = np.linalg.norm(delta)
    if norm == 0:
        raise ZeroPerturbation("the angle of a zero perturbation is undefined")
    ratio = np.clip(np.linalg.norm(project(entry, delta)) / norm, 0.0, 1.0)
    return float(np.degrees(np.arccos(ratio)))


def angles_from_components(tcs: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """Vectorized :func:`angle_degrees` from precomputed TCs and perturbation norms."""
    if np.any(norms == 0):
        raise ZeroPerturbation("the angle of a zero perturbation is undefined")
    return np.degrees(np.arccos(np.clip(tcs / norms, 0.0, 1.0)))
