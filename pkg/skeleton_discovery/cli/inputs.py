from __future__ import annotations

from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from skeleton_discovery.errors import ArtifactError, ConfigError
from skeleton_discovery.serialization import load_artifact
from skeleton_discovery.types import (
    AffinitySet,
    KeypointTracks,
    MotionSequence,
    SkeletonTree,
    VoxelSequence,
)
from skeleton_discovery.voxelize.io import read_vertices, read_voxel_sequence

A = TypeVar("A")

_KINDS: dict[type, str] = {
    KeypointTracks: "keypoints",
    AffinitySet: "affinity",
    SkeletonTree: "skeleton",
    MotionSequence: "motion",
}


def require_path(value: str | Path | None, what: str) -> Path:
    if value is None:
        raise ConfigError(f"{what} is required")
    return Path(value)


def load_typed(path: Path, expected: type[A]) -> tuple[A, dict[str, Any]]:
    """Load an artifact and check it is of the ``expected`` kind."""
    artifact, provenance = load_artifact(path)
    if not isinstance(artifact, expected):
        kind = _KINDS.get(expected, expected.__name__)
        raise ArtifactError(f"{path}: expected a {kind} artifact")
    return artifact, provenance


def load_keypoints(path: Path) -> KeypointTracks:
    return load_typed(path, KeypointTracks)[0]


def load_affinity(path: Path) -> AffinitySet:
    return load_typed(path, AffinitySet)[0]


def load_skeleton(path: Path) -> SkeletonTree:
    """A skeleton artifact, or the skeleton embedded in a motion artifact."""
    artifact, _ = load_artifact(path)
    if isinstance(artifact, MotionSequence):
        return artifact.skeleton
    if not isinstance(artifact, SkeletonTree):
        raise ArtifactError(f"{path}: expected a skeleton artifact")
    return artifact


def load_motion(path: Path) -> MotionSequence:
    return load_typed(path, MotionSequence)[0]


def load_voxels(path: Path) -> VoxelSequence:
    return read_voxel_sequence(path)


def load_vertices(path: Path) -> np.ndarray:
    return read_vertices(path)
