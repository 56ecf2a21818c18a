"""Forward kinematics over a skeleton tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skeleton_discovery.errors import KinematicsError
from skeleton_discovery.types import MotionSequence, Pose, SkeletonTree


@dataclass(frozen=True, eq=False)
class JointTransforms:
    """Global joint positions (K, 3) and accumulated rotations (K, 3, 3)."""

    positions: np.ndarray
    rotations: np.ndarray


def _check_pose(skeleton: SkeletonTree, pose: Pose) -> None:
    if pose.K != skeleton.K:
        raise KinematicsError(f"pose has {pose.K} joints, skeleton has {skeleton.K}")


def joint_transforms(
    skeleton: SkeletonTree,
    pose: Pose,
    *,
    offsets: np.ndarray | None = None,
) -> JointTransforms:
    """Accumulate rotations from the root and place every joint.

    ``R_k = R_parent(k) @ R~_k`` and ``mu_k = mu_parent(k) + R_k @ d_k``;
    ``offsets`` replaces the skeleton's scaled offsets when given.
    """
    _check_pose(skeleton, pose)
    bone_offsets = skeleton.offsets if offsets is None else np.asarray(offsets, dtype=np.float64)
    if bone_offsets.shape != (skeleton.K, 3):
        raise KinematicsError(f"offsets must be ({skeleton.K}, 3), got {bone_offsets.shape}")
    rotations = np.empty((skeleton.K, 3, 3))
    positions = np.empty((skeleton.K, 3))
    for node in skeleton.order:
        if node == skeleton.root:
            rotations[node] = pose.rotations[node]
            positions[node] = pose.root_translation
            continue
        parent = skeleton.parents[node]
        rotations[node] = rotations[parent] @ pose.rotations[node]
        positions[node] = positions[parent] + rotations[node] @ bone_offsets[node]
    return JointTransforms(positions=positions, rotations=rotations)


def forward_kinematics(
    skeleton: SkeletonTree,
    pose: Pose,
    *,
    offsets: np.ndarray | None = None,
) -> np.ndarray:
    """Return the (K, 3) joint positions of ``pose``."""
    return joint_transforms(skeleton, pose, offsets=offsets).positions


def motion_joints(motion: MotionSequence, *, offsets: np.ndarray | None = None) -> np.ndarray:
    """Return (T, K, 3) joint positions for every frame of ``motion``."""
    return np.stack(
        [
            forward_kinematics(motion.skeleton, motion.pose(t), offsets=offsets)
            for t in range(motion.T)
        ]
    )
