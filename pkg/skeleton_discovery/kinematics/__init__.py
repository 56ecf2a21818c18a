"""Kinematics public API."""

from __future__ import annotations

from skeleton_discovery.kinematics.fit import PoseFit, fit_motion, fit_pose_rotations
from skeleton_discovery.kinematics.fk import (
    JointTransforms,
    forward_kinematics,
    joint_transforms,
    motion_joints,
)
from skeleton_discovery.kinematics.interpolate import (
    interpolate_motion,
    lerp_keypoints,
    slerp_motion,
    slerp_pose,
    slerp_rotations,
)
from skeleton_discovery.kinematics.rotations import (
    matrix_to_rot6d,
    rot6d_to_matrix,
    rot6d_vjp,
)

__all__ = [
    "JointTransforms",
    "PoseFit",
    "fit_motion",
    "fit_pose_rotations",
    "forward_kinematics",
    "interpolate_motion",
    "joint_transforms",
    "lerp_keypoints",
    "matrix_to_rot6d",
    "motion_joints",
    "rot6d_to_matrix",
    "rot6d_vjp",
    "slerp_motion",
    "slerp_pose",
    "slerp_rotations",
]
