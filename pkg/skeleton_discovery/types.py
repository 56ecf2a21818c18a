"""Package-wide type definitions."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from skeleton_discovery.errors import (
    InputError,
    KeypointError,
    KinematicsError,
    SkeletonError,
    SkinningError,
)

_ROTATION_TOLERANCE = 1e-6


def _as_points(values: Any) -> np.ndarray:
    points = np.asarray(values, dtype=np.float64)
    if points.size == 0:
        return np.zeros((0, 3), dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise InputError(f"expected an (N, 3) point array, got shape {points.shape}")
    return points


@dataclass(frozen=True, eq=False)
class PointFrame:
    """One frame of a point-cloud sequence in world units."""

    points: np.ndarray
    is_padding: bool = False

    def __post_init__(self) -> None:
        points = _as_points(self.points)
        if not np.all(np.isfinite(points)):
            raise InputError("point frame contains non-finite coordinates")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def is_empty(self) -> bool:
        return self.points.shape[0] == 0


@dataclass(frozen=True, eq=False)
class BBox:
    """Axis-aligned bounding box shared by every frame of a sequence."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.minimum, dtype=np.float64).reshape(3)
        hi = np.asarray(self.maximum, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputError("bounding box must be finite")
        if np.any(hi < lo):
            raise InputError("bounding box max must be >= min on every axis")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    @property
    def extent(self) -> np.ndarray:
        return self.maximum - self.minimum

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.minimum + self.maximum)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extent))

    def normalize(self, points: np.ndarray) -> np.ndarray:
        """Map world coordinates into the unit cube spanned by the box."""
        return (np.asarray(points, dtype=np.float64) - self.minimum) / self.extent

    def denormalize(self, points: np.ndarray) -> np.ndarray:
        return self.minimum + np.asarray(points, dtype=np.float64) * self.extent


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Binary occupancy over a (G_x, G_y, G_z) grid."""

    occupancy: np.ndarray

    def __post_init__(self) -> None:
        occupancy = np.asarray(self.occupancy, dtype=bool)
        if occupancy.ndim != 3 or min(occupancy.shape) < 1:
            raise InputError(f"voxel grid must be 3-dimensional, got {occupancy.shape}")
        object.__setattr__(self, "occupancy", occupancy)

    @property
    def resolution(self) -> tuple[int, int, int]:
        gx, gy, gz = self.occupancy.shape
        return (gx, gy, gz)

    @property
    def occupied_count(self) -> int:
        return int(self.occupancy.sum())


@dataclass(frozen=True, eq=False)
class VoxelSequence:
    """T occupancy grids that share one resolution and bounding box."""

    occupancy: np.ndarray
    bbox: BBox

    def __post_init__(self) -> None:
        occupancy = np.asarray(self.occupancy, dtype=bool)
        if occupancy.ndim != 4 or occupancy.shape[0] < 1:
            raise InputError(f"voxel sequence must be (T, Gx, Gy, Gz), got {occupancy.shape}")
        object.__setattr__(self, "occupancy", occupancy)

    def __len__(self) -> int:
        return self.frame_count

    @property
    def frame_count(self) -> int:
        return int(self.occupancy.shape[0])

    @property
    def resolution(self) -> tuple[int, int, int]:
        _, gx, gy, gz = self.occupancy.shape
        return (gx, gy, gz)

    def frame(self, index: int) -> VoxelGrid:
        return VoxelGrid(self.occupancy[index])

    @property
    def frames(self) -> list[VoxelGrid]:
        return [self.frame(t) for t in range(self.frame_count)]


@dataclass(frozen=True, eq=False)
class Keypoint:
    """Position in normalized coordinates plus intensity."""

    mu: np.ndarray
    alpha: float
    degenerate: bool = False

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(mu)):
            raise KeypointError("keypoint position must be finite")
        if not 0.0 <= self.alpha <= 1.0:
            raise KeypointError(f"keypoint intensity must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "mu", mu)


@dataclass(frozen=True, eq=False)
class KeypointTracks:
    """Per-frame positions ``mu`` (T, K, 3) and intensities ``alpha`` (T, K)."""

    mu: np.ndarray
    alpha: np.ndarray

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=np.float64)
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if mu.ndim != 3 or mu.shape[2] != 3:
            raise KeypointError(f"keypoint positions must be (T, K, 3), got {mu.shape}")
        if alpha.shape != mu.shape[:2]:
            raise KeypointError(
                f"intensities must be (T, K) = {mu.shape[:2]}, got {alpha.shape}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(alpha))):
            raise KeypointError("keypoint tracks contain non-finite values")
        if np.any(alpha < 0.0) or np.any(alpha > 1.0):
            raise KeypointError("keypoint intensities must lie in [0, 1]")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", alpha)

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.mu.shape[0])

    @property
    def K(self) -> int:  # noqa: N802
        return int(self.mu.shape[1])

    def frame(self, index: int) -> np.ndarray:
        """Return frame ``index`` as a (K, 4) array of ``[x, y, z, alpha]``."""
        return np.concatenate([self.mu[index], self.alpha[index][:, None]], axis=1)

    @classmethod
    def from_frames(cls, frames: list[np.ndarray]) -> KeypointTracks:
        stacked = np.stack([np.asarray(frame, dtype=np.float64) for frame in frames])
        return cls(mu=stacked[..., :3], alpha=stacked[..., 3])


@dataclass(frozen=True, eq=False)
class Heatmap:
    """Non-negative scalar field over a voxel grid."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise KeypointError(f"heatmap must be 3-dimensional, got {values.shape}")
        if np.any(values < 0.0):
            raise KeypointError("heatmap values must be non-negative")
        object.__setattr__(self, "values", values)

    @property
    def resolution(self) -> tuple[int, int, int]:
        gx, gy, gz = self.values.shape
        return (gx, gy, gz)


@dataclass(frozen=True, eq=False)
class AffinitySet:
    """Decomposed affinity matrices ``A_n`` and their elementwise-max combination."""

    matrices: np.ndarray
    combined: np.ndarray
    degenerate: bool = False

    @property
    def N(self) -> int:  # noqa: N802
        return int(self.matrices.shape[0])

    @property
    def K(self) -> int:  # noqa: N802
        return int(self.combined.shape[0])


def topological_order(parents: np.ndarray, root: int) -> list[int]:
    """Return nodes parent-before-child, raising if ``parents`` is not a rooted tree."""
    parents = np.asarray(parents)
    count = parents.shape[0]
    if not 0 <= root < count:
        raise SkeletonError(f"not a tree: root {root} out of range")
    if np.any(parents < 0) or np.any(parents >= count):
        raise SkeletonError("not a tree: parent index out of range")
    if parents[root] != root:
        raise SkeletonError("not a tree: root must be its own parent")
    children: list[list[int]] = [[] for _ in range(count)]
    for node, parent in enumerate(parents):
        if node == root:
            continue
        if parent == node:
            raise SkeletonError(f"not a tree: node {node} is a second root")
        children[int(parent)].append(node)
    order: list[int] = []
    queue = deque([root])
    while queue:
        node = queue.popleft()
        order.append(node)
        queue.extend(children[node])
    if len(order) != count:
        raise SkeletonError("not a tree: parents contain a cycle or unreachable node")
    return order


@dataclass(frozen=True, eq=False)
class SkeletonTree:
    """Rooted tree with canonical unit offsets and first-frame scaled offsets."""

    root: int
    parents: np.ndarray
    unit_offsets: np.ndarray
    offsets: np.ndarray
    intensities: np.ndarray
    order: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        parents = np.asarray(self.parents, dtype=np.int64).reshape(-1)
        count = parents.shape[0]
        unit = np.asarray(self.unit_offsets, dtype=np.float64).reshape(count, 3)
        offsets = np.asarray(self.offsets, dtype=np.float64).reshape(count, 3)
        intensities = np.asarray(self.intensities, dtype=np.float64).reshape(count)
        order = topological_order(parents, int(self.root))
        object.__setattr__(self, "root", int(self.root))
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "unit_offsets", unit)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "intensities", intensities)
        object.__setattr__(self, "order", tuple(order))

    @property
    def K(self) -> int:  # noqa: N802
        return int(self.parents.shape[0])

    @property
    def bone_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.offsets, axis=1)

    def with_offsets(self, offsets: np.ndarray) -> SkeletonTree:
        return SkeletonTree(
            root=self.root,
            parents=self.parents,
            unit_offsets=self.unit_offsets,
            offsets=offsets,
            intensities=self.intensities,
        )


def _check_rotations(rotations: np.ndarray) -> None:
    identity = np.eye(3)
    gram = np.einsum("...ji,...jk->...ik", rotations, rotations)
    if np.any(np.abs(gram - identity) > _ROTATION_TOLERANCE):
        raise KinematicsError("rotation matrices must be orthonormal")
    if np.any(np.abs(np.linalg.det(rotations) - 1.0) > _ROTATION_TOLERANCE):
        raise KinematicsError("rotation matrices must have determinant +1")


@dataclass(frozen=True, eq=False)
class Pose:
    """Root translation, K local rotations (w.r.t. parent) and intensities."""

    root_translation: np.ndarray
    rotations: np.ndarray
    intensities: np.ndarray

    def __post_init__(self) -> None:
        translation = np.asarray(self.root_translation, dtype=np.float64).reshape(3)
        rotations = np.asarray(self.rotations, dtype=np.float64)
        if rotations.ndim != 3 or rotations.shape[1:] != (3, 3):
            raise KinematicsError(f"rotations must be (K, 3, 3), got {rotations.shape}")
        intensities = np.asarray(self.intensities, dtype=np.float64).reshape(
            rotations.shape[0]
        )
        _check_rotations(rotations)
        object.__setattr__(self, "root_translation", translation)
        object.__setattr__(self, "rotations", rotations)
        object.__setattr__(self, "intensities", intensities)

    @property
    def K(self) -> int:  # noqa: N802
        return int(self.rotations.shape[0])

    @classmethod
    def identity(cls, count: int, root_translation: np.ndarray | None = None) -> Pose:
        translation = np.zeros(3) if root_translation is None else root_translation
        return cls(
            root_translation=translation,
            rotations=np.tile(np.eye(3), (count, 1, 1)),
            intensities=np.ones(count),
        )


@dataclass(frozen=True, eq=False)
class MotionSequence:
    """T poses over one skeleton, stored as stacked arrays.

    Rotations are held in their 6D form; ``rotations`` holds the
    Gram-Schmidt matrices derived from it.
    """

    skeleton: SkeletonTree
    root_translations: np.ndarray
    rotations_6d: np.ndarray
    intensities: np.ndarray
    rotations: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        from skeleton_discovery.kinematics.rotations import rot6d_to_matrix

        translations = np.asarray(self.root_translations, dtype=np.float64).reshape(-1, 3)
        sixd = np.asarray(self.rotations_6d, dtype=np.float64)
        intensities = np.asarray(self.intensities, dtype=np.float64)
        frames = translations.shape[0]
        if sixd.shape != (frames, self.skeleton.K, 6):
            raise KinematicsError(
                f"motion rotations must be (T, K, 6) = "
                f"{(frames, self.skeleton.K, 6)}, got {sixd.shape}"
            )
        if intensities.shape != (frames, self.skeleton.K):
            raise KinematicsError("motion intensities must be (T, K)")
        object.__setattr__(self, "root_translations", translations)
        object.__setattr__(self, "rotations_6d", sixd)
        object.__setattr__(self, "intensities", intensities)
        object.__setattr__(self, "rotations", rot6d_to_matrix(sixd))

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.root_translations.shape[0])

    def pose(self, index: int) -> Pose:
        return Pose(
            root_translation=self.root_translations[index],
            rotations=self.rotations[index],
            intensities=self.intensities[index],
        )

    @property
    def poses(self) -> list[Pose]:
        return [self.pose(t) for t in range(self.T)]

    @classmethod
    def from_poses(cls, skeleton: SkeletonTree, poses: list[Pose]) -> MotionSequence:
        from skeleton_discovery.kinematics.rotations import matrix_to_rot6d

        return cls(
            skeleton=skeleton,
            root_translations=np.stack([pose.root_translation for pose in poses]),
            rotations_6d=np.stack([matrix_to_rot6d(pose.rotations) for pose in poses]),
            intensities=np.stack([pose.intensities for pose in poses]),
        )


@dataclass(frozen=True, eq=False)
class MetricReport:
    """A metric value with its per-frame breakdown."""

    metric: str
    value: float
    per_frame: tuple[float, ...] = ()
    ci_half_width: float | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        """Return the per-frame breakdown as a DataFrame."""
        return pd.DataFrame(
            {
                "frame": np.arange(len(self.per_frame), dtype=np.int64),
                self.metric: np.asarray(self.per_frame, dtype=np.float64),
            }
        )


@dataclass(frozen=True, eq=False)
class SkinWeights:
    """Non-negative (N_p, K) vertex-to-joint weights."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise SkinningError(f"skin weights must be (N_p, K), got {matrix.shape}")
        if not np.all(np.isfinite(matrix)) or np.any(matrix < 0.0):
            raise SkinningError("skin weights must be finite and non-negative")
        object.__setattr__(self, "matrix", matrix)

    @property
    def vertex_count(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def K(self) -> int:  # noqa: N802
        return int(self.matrix.shape[1])


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Generating motion and world-space joint positions of a synthetic rig."""

    motion: MotionSequence
    joints: np.ndarray

    def __post_init__(self) -> None:
        joints = np.asarray(self.joints, dtype=np.float64)
        expected = (self.motion.T, self.motion.skeleton.K, 3)
        if joints.shape != expected:
            raise InputError(f"ground-truth joints must be {expected}, got {joints.shape}")
        object.__setattr__(self, "joints", joints)
