"""Dense linear algebra kernel: subspace projectors, first principal component, principal angles.

Vectors and matrices are float64 numpy arrays. The helpers ``as_vector`` and
``as_matrix`` enforce the shape and finiteness invariants every other module
relies on.
"""

from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg

from core.exceptions import (
    DegenerateSamples,
    DimensionMismatch,
    NonFiniteValue,
    RankDeficient,
)

# Gram matrices with a larger condition number are treated as rank deficient.
CONDITION_LIMIT = 1e12

# Rows closer than this are considered identical by the PCA step.
DEGENERATE_SPREAD = 1e-14


def as_vector(values: np.ndarray, name: str = "vector") -> np.ndarray:
    """Return ``values`` as a finite 1-D float64 array."""
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1 or array.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 1-D array, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return array


def as_matrix(values: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Return ``values`` as a finite 2-D float64 array with positive dimensions."""
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 2 or 0 in array.shape:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return array


def check_full_rank(basis: np.ndarray, name: str) -> np.ndarray:
    """Return the Gram matrix of ``basis`` after the condition-number guard."""
    rows, cols = basis.shape
    if cols > rows:
        raise RankDeficient(f"{name} has {cols} columns in dimension {rows}")
    gram = basis.T @ basis
    condition = np.linalg.cond(gram)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise RankDeficient(
            f"{name} Gram matrix condition number {condition:.3e} exceeds "
            f"{CONDITION_LIMIT:.0e}"
        )
    return gram


@dataclass(frozen=True)
class ProjectorFactors:
    """The pair (A, A(AᵀA)⁻¹) that stores the projector onto span(A) in 2·d·k floats."""

    basis: np.ndarray
    left_factor: np.ndarray

    @property
    def dim(self: "ProjectorFactors") -> int:
        """Ambient dimension d."""
        return self.basis.shape[0]

    @property
    def rank(self: "ProjectorFactors") -> int:
        """Subspace dimension k."""
        return self.basis.shape[1]

    def project(self: "ProjectorFactors", v: np.ndarray) -> np.ndarray:
        """Shortcut for :func:`project`."""
        return project(self, v)


def projector_factors(basis: np.ndarray) -> ProjectorFactors:
    """Factor the orthogonal projector onto the column space of ``basis``.

    Args:
        basis: d×k matrix A with k ≤ d and full column rank.

    Returns:
        ProjectorFactors holding A and A(AᵀA)⁻¹, so that
        ``left_factor @ (basis.T @ v)`` equals Π_A v.

    Raises:
        RankDeficient: if the condition number of AᵀA exceeds ``CONDITION_LIMIT``.
    """
    basis = as_matrix(basis, "basis")
    gram = check_full_rank(basis, "basis")
    factor = scipy.linalg.cho_factor(gram, lower=False, check_finite=False)
    # (AᵀA)⁻¹ is symmetric, so A(AᵀA)⁻¹ = ((AᵀA)⁻¹Aᵀ)ᵀ.
    left = scipy.linalg.cho_solve(factor, basis.T, check_finite=False).T
    return ProjectorFactors(basis=basis, left_factor=np.ascontiguousarray(left))


def project(factors: ProjectorFactors, v: np.ndarray) -> np.ndarray:
    """Apply Π_A to a vector (or to each row of a 2-D array)."""
    array = np.asarray(v, dtype=np.float64)
    if array.shape[-1] != factors.dim or array.ndim > 2:
        raise DimensionMismatch(
            f"cannot project shape {array.shape} in dimension {factors.dim}"
        )
    if array.ndim == 1:
        return factors.left_factor @ (factors.basis.T @ array)
    return (array @ factors.basis) @ factors.left_factor.T


def first_principal_component(samples: np.ndarray) -> np.ndarray:
    """Unit direction of maximal variance of the mean-centred rows of ``samples``.

    The sign is fixed so the entry of largest magnitude is positive.

    Raises:
        DimensionMismatch: fewer than two rows.
        DegenerateSamples: all rows identical within ``DEGENERATE_SPREAD``.
    """
    samples = as_matrix(samples, "samples")
    if samples.shape[0] < 2:
        raise DimensionMismatch("principal component needs at least two rows")
    if np.max(np.ptp(samples, axis=0)) <= DEGENERATE_SPREAD:
        raise DegenerateSamples("all sampled rows are identical")
    centered = samples - samples.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    component = vt[0]
    if component[np.argmax(np.abs(component))] < 0:
        component = -component
    return component / np.linalg.norm(component)


def principal_angles(u: np.ndarray, v: np.ndarray) -> List[float]:
    """Principal angles (radians, nondecreasing) between span(u) and span(v)."""
    u = as_matrix(u, "u")
    v = as_matrix(v, "v")
    if u.shape[0] != v.shape[0]:
        raise DimensionMismatch(f"ambient dimensions differ: {u.shape[0]} vs {v.shape[0]}")
    check_full_rank(u, "u")
    check_full_rank(v, "v")
    angles = np.sort(scipy.linalg.subspace_angles(u, v))
    return [float(a) for a in np.clip(angles, 0.0, np.pi / 2)]
