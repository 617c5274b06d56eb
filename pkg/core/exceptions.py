"""Error kinds raised across the tart apps."""

from typing import Optional


class TartError(Exception):
    """Base class for every domain error raised by the tart apps."""


class DimensionMismatch(TartError, ValueError):
    """Array shapes do not chain (vector length, matrix rows, layer widths)."""


class NonFiniteValue(TartError, ValueError):
    """An input array contains NaN or Inf."""


class RankDeficient(TartError):
    """A basis matrix is not of full column rank within the condition limit."""

    def __init__(
        self: "RankDeficient", message: str, index: Optional[int] = None
    ) -> None:
        """Record the offending example index when one is known."""
        if index is not None:
            message = f"{message} (example {index})"
        super().__init__(message)
        self.index = index


class DegenerateSamples(TartError):
    """All sampled rows coincide, so no principal direction exists."""


class LabelOutOfRange(TartError, ValueError):
    """A class label is outside [0, c)."""


class ZeroPerturbation(TartError, ValueError):
    """An angle was requested for a zero perturbation."""


class EmptyBatch(TartError, ValueError):
    """An operation that needs at least one example received none."""


class InvalidDistribution(TartError, ValueError):
    """Probability vectors are negative, mis-sized or do not sum to one."""


class FormatError(TartError):
    """A binary artifact has a bad magic, version or length."""


class HashMismatch(TartError):
    """A tangent cache was built from a different dataset."""


class CacheMismatch(TartError):
    """A tangent cache cannot serve the requested examples."""


class MissingArtifact(TartError):
    """A run directory lacks a file an operation depends on."""
