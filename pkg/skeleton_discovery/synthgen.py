"""Synthetic articulated rigs with known skeleton, motion and surface."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from skeleton_discovery.errors import ArtifactError, ConfigError
from skeleton_discovery.kinematics.fk import joint_transforms, motion_joints
from skeleton_discovery.kinematics.rotations import matrix_to_rot6d
from skeleton_discovery.serialization import dump_artifact, load_artifact
from skeleton_discovery.types import GroundTruth, MotionSequence, PointFrame, Pose, SkeletonTree
from skeleton_discovery.voxelize.io import write_point_frame

logger = logging.getLogger(__name__)

DEFAULT_POINTS_PER_BONE = 400
DEFAULT_MOTION_PERIOD = 40.0
DEFAULT_LENGTH_RANGE = (0.6, 1.4)
MIN_ARM_ANGLE = np.pi / 3
_ARM_DRAWS = 10_000
GROUND_TRUTH_NAME = "ground_truth.json"
FRAME_TEMPLATE = "frame_{:04d}.ply"


@dataclass(frozen=True, eq=False)
class SyntheticRig:
    """A generated skeleton with its motion and rigidly carried surface samples.

    ``surface`` is (T, N, 3); ``point_bones[n]`` is the child joint whose
    bone carries surface point ``n``.
    """

    skeleton: SkeletonTree
    motion: MotionSequence
    joints: np.ndarray
    rest_points: np.ndarray
    point_bones: np.ndarray
    surface: np.ndarray

    @property
    def T(self) -> int:  # noqa: N802
        return self.motion.T

    @property
    def ground_truth(self) -> GroundTruth:
        return GroundTruth(motion=self.motion, joints=self.joints)

    @property
    def frames(self) -> list[PointFrame]:
        return [PointFrame(points) for points in self.surface]


def _lengths(
    value: Sequence[float] | float | None, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Explicit bone lengths, or seeded draws from ``DEFAULT_LENGTH_RANGE``."""
    if value is None:
        return rng.uniform(*DEFAULT_LENGTH_RANGE, size=count)
    lengths = np.broadcast_to(np.asarray(value, dtype=np.float64), (count,)).copy()
    if np.any(lengths <= 0.0):
        raise ConfigError("bone lengths must be > 0")
    return lengths


def _check_common(
    frames: int, capsule_radius: float, points_per_bone: int, motion_period: float
) -> None:
    if frames < 3:
        raise ConfigError(f"synthetic rigs need at least 3 frames, got {frames}")
    if motion_period <= 0.0:
        raise ConfigError("motion_period must be > 0")
    if capsule_radius < 0.0:
        raise ConfigError("capsule_radius must be >= 0")
    if points_per_bone < 1:
        raise ConfigError("points_per_bone must be >= 1")


def _unit_vectors(rng: np.random.Generator, count: int) -> np.ndarray:
    vectors = rng.standard_normal((count, 3))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def spread_directions(
    rng: np.random.Generator, count: int, min_angle: float = MIN_ARM_ANGLE
) -> np.ndarray:
    """``count`` seeded unit vectors, pairwise at least ``min_angle`` apart.

    Candidates are drawn one at a time and kept when they clear every kept
    direction.
    """
    threshold = np.cos(min_angle)
    kept: list[np.ndarray] = []
    for _ in range(_ARM_DRAWS):
        candidate = _unit_vectors(rng, 1)[0]
        if all(float(np.dot(candidate, other)) <= threshold for other in kept):
            kept.append(candidate)
            if len(kept) == count:
                return np.stack(kept)
    raise ConfigError(
        f"could not place {count} directions {np.degrees(min_angle):.0f} degrees apart"
    )


def sinusoidal_motion(
    skeleton: SkeletonTree,
    frames: int,
    amplitude: float,
    rng: np.random.Generator,
    period: float = DEFAULT_MOTION_PERIOD,
) -> MotionSequence:
    """One low-frequency swing per joint about a seeded axis, plus root sway.

    ``amplitude`` is the peak rotation angle in radians and ``period`` the
    swing period in frames, independent of the sequence length. Zero
    amplitude gives the rest pose in every frame.
    """
    count = skeleton.K
    axes = _unit_vectors(rng, count)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=count)
    sway = _unit_vectors(rng, 1)[0]
    time = np.arange(frames) / period
    angles = amplitude * np.sin(2.0 * np.pi * time[:, None] + phases[None, :])
    rotvecs = angles[..., None] * axes[None, :, :]
    matrices = Rotation.from_rotvec(rotvecs.reshape(-1, 3)).as_matrix()
    reach = float(np.max(skeleton.bone_lengths)) if count > 1 else 1.0
    translations = 0.25 * amplitude * reach * np.sin(2.0 * np.pi * time)[:, None] * sway
    return MotionSequence(
        skeleton=skeleton,
        root_translations=translations,
        rotations_6d=matrix_to_rot6d(matrices).reshape(frames, count, 6),
        intensities=np.ones((frames, count)),
    )


def sample_capsules(
    rest_joints: np.ndarray,
    parents: np.ndarray,
    root: int,
    radius: float,
    points_per_bone: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Points at distance ``radius`` from a uniform position on every bone."""
    bones = np.array([node for node in range(parents.shape[0]) if node != root])
    owners = np.repeat(bones, points_per_bone)
    start = rest_joints[parents[owners]]
    along = rng.uniform(0.0, 1.0, size=owners.shape[0])[:, None]
    points = start + along * (rest_joints[owners] - start)
    points += radius * _unit_vectors(rng, owners.shape[0])
    return points, owners


def carry_points(
    rest_points: np.ndarray,
    point_bones: np.ndarray,
    skeleton: SkeletonTree,
    motion: MotionSequence,
    rest: Pose,
) -> np.ndarray:
    """Move each point rigidly with its bone, ``p_t = mu_k(t) + G_k(t) G_k^T (p - mu_k)``."""
    bound = joint_transforms(skeleton, rest)
    local = np.einsum(
        "nji,nj->ni",
        bound.rotations[point_bones],
        rest_points - bound.positions[point_bones],
    )
    carried = np.empty((motion.T,) + rest_points.shape)
    for t, pose in enumerate(motion.poses):
        posed = joint_transforms(skeleton, pose)
        carried[t] = posed.positions[point_bones] + np.einsum(
            "nij,nj->ni", posed.rotations[point_bones], local
        )
    return carried


def _assemble(
    skeleton: SkeletonTree,
    frames: int,
    amplitude: float,
    period: float,
    capsule_radius: float,
    points_per_bone: int,
    rng: np.random.Generator,
) -> SyntheticRig:
    motion = sinusoidal_motion(skeleton, frames, amplitude, rng, period)
    rest = Pose.identity(skeleton.K)
    rest_joints = joint_transforms(skeleton, rest).positions
    rest_points, owners = sample_capsules(
        rest_joints, skeleton.parents, skeleton.root, capsule_radius, points_per_bone, rng
    )
    return SyntheticRig(
        skeleton=skeleton,
        motion=motion,
        joints=motion_joints(motion),
        rest_points=rest_points,
        point_bones=owners,
        surface=carry_points(rest_points, owners, skeleton, motion, rest),
    )


def make_chain_rig(
    segments: int = 3,
    lengths: Sequence[float] | float | None = None,
    capsule_radius: float = 0.1,
    frames: int = 20,
    motion_amplitude: float = 0.5,
    points_per_bone: int = DEFAULT_POINTS_PER_BONE,
    seed: int = 0,
    motion_period: float = DEFAULT_MOTION_PERIOD,
) -> SyntheticRig:
    """Serial chain of ``segments`` bones laid along +x from joint 0.

    Without ``lengths`` the bone lengths are seeded draws from
    ``DEFAULT_LENGTH_RANGE``.
    """
    if segments < 1:
        raise ConfigError(f"a chain needs at least one segment, got {segments}")
    _check_common(frames, capsule_radius, points_per_bone, motion_period)
    rng = np.random.default_rng(seed)
    bone_lengths = _lengths(lengths, segments, rng)
    count = segments + 1
    unit = np.zeros((count, 3))
    unit[1:, 0] = 1.0
    offsets = unit.copy()
    offsets[1:] *= bone_lengths[:, None]
    skeleton = SkeletonTree(
        root=0,
        parents=np.maximum(np.arange(count) - 1, 0),
        unit_offsets=unit,
        offsets=offsets,
        intensities=np.ones(count),
    )
    rig = _assemble(
        skeleton, frames, motion_amplitude, motion_period, capsule_radius, points_per_bone, rng
    )
    logger.debug("chain rig: %d joints, %d surface points", count, rig.rest_points.shape[0])
    return rig


def make_star_rig(
    arms: int = 5,
    lengths: Sequence[float] | float | None = None,
    capsule_radius: float = 0.1,
    frames: int = 20,
    motion_amplitude: float = 0.5,
    points_per_bone: int = DEFAULT_POINTS_PER_BONE,
    seed: int = 0,
    motion_period: float = DEFAULT_MOTION_PERIOD,
) -> SyntheticRig:
    """``arms`` single-bone arms hanging off a central root.

    Arm directions are seeded and at least ``MIN_ARM_ANGLE`` apart; arm
    lengths default to seeded draws like :func:`make_chain_rig`.
    """
    if arms < 2:
        raise ConfigError(f"a star needs at least two arms, got {arms}")
    _check_common(frames, capsule_radius, points_per_bone, motion_period)
    rng = np.random.default_rng(seed)
    bone_lengths = _lengths(lengths, arms, rng)
    count = arms + 1
    unit = np.zeros((count, 3))
    unit[1:] = spread_directions(rng, arms)
    skeleton = SkeletonTree(
        root=0,
        parents=np.zeros(count, dtype=np.int64),
        unit_offsets=unit,
        offsets=unit * np.concatenate([[0.0], bone_lengths])[:, None],
        intensities=np.ones(count),
    )
    return _assemble(
        skeleton, frames, motion_amplitude, motion_period, capsule_radius, points_per_bone, rng
    )


def write_rig_bundle(
    rig: SyntheticRig,
    directory: Path | str,
    *,
    config_hash: str | None = None,
    seed: int | None = None,
) -> Path:
    """Write one ASCII PLY per frame and ``ground_truth.json`` into ``directory``."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for t, points in enumerate(rig.surface):
        write_point_frame(points, root / FRAME_TEMPLATE.format(t))
    dump_artifact(rig.ground_truth, root / GROUND_TRUTH_NAME, config_hash=config_hash, seed=seed)
    logger.info("wrote %d frames and ground truth to %s", rig.T, root)
    return root


def load_ground_truth(path: Path | str) -> GroundTruth:
    """Read a ``rig`` artifact; a directory resolves to its ``ground_truth.json``."""
    source = Path(path)
    if source.is_dir():
        source = source / GROUND_TRUTH_NAME
    artifact, _ = load_artifact(source)
    if not isinstance(artifact, GroundTruth):
        raise ArtifactError(f"{source}: expected a rig artifact")
    return artifact
