"""Exception hierarchy shared by every stage."""

from __future__ import annotations

__all__ = [
    "AffinityError",
    "ArtifactError",
    "ConfigError",
    "InputError",
    "KeypointError",
    "KinematicsError",
    "MetricError",
    "NumericalError",
    "RetargetError",
    "SkeletonDiscoveryError",
    "SkeletonError",
    "SkinningError",
    "StageError",
    "VoxelizationError",
]


class SkeletonDiscoveryError(RuntimeError):
    """Base class for failures raised by this package."""

    exit_code: int = 4


class ConfigError(SkeletonDiscoveryError):
    """Invalid configuration file, flag, or environment value."""

    exit_code = 2


class InputError(SkeletonDiscoveryError):
    """Missing or malformed input data."""

    exit_code = 3


class ArtifactError(InputError):
    """An artifact file violates its schema."""


class VoxelizationError(InputError):
    """Point frames cannot be voxelized."""


class NumericalError(SkeletonDiscoveryError):
    """A numerical stage could not produce a result."""


class KeypointError(NumericalError):
    pass


class AffinityError(NumericalError):
    pass


class SkeletonError(NumericalError):
    pass


class KinematicsError(NumericalError):
    pass


class RetargetError(NumericalError):
    pass


class SkinningError(NumericalError):
    pass


class MetricError(NumericalError):
    pass


class StageError(SkeletonDiscoveryError):
    """A pipeline stage failed; the message is prefixed with the stage name."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.exit_code = getattr(cause, "exit_code", NumericalError.exit_code)
