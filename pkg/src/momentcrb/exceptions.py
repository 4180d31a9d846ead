"""Exception types shared across the package."""


class MomentCrbError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MomentCrbError):
    """Invalid run configuration (bad field value, malformed document)."""


class SingularDiagonal(MomentCrbError):
    """A triangular matrix has a zero diagonal entry and cannot be inverted."""

    def __init__(self, index):
        super().__init__(f"zero diagonal entry at index {index}")
        self.index = index


class InsufficientMoments(MomentCrbError):
    """Not enough moments supplied for the requested matrix size."""


class NotPositiveDefinite(MomentCrbError):
    """Reference moment sequence is not strictly positive definite."""


class TruncationTooSmall(MomentCrbError):
    """Mode truncation leaves more tail mass than the tolerance allows."""


class SingularInformation(MomentCrbError):
    """Truncated Fisher information matrix is numerically singular."""


class EmptySample(MomentCrbError):
    """Operation requires at least one detected photon."""
