"""In-betweening of poses (rotation space) and keypoints (joint space)."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from skeleton_discovery.errors import KinematicsError
from skeleton_discovery.kinematics.fk import forward_kinematics, motion_joints
from skeleton_discovery.types import KeypointTracks, MotionSequence, Pose


def slerp_rotations(
    start: np.ndarray, end: np.ndarray, weights: Sequence[float] | np.ndarray
) -> np.ndarray:
    """Shortest-arc interpolation of two (K, 3, 3) rotation stacks, shaped (n, K, 3, 3).

    Weights of exactly 0 and 1 return ``start`` and ``end`` unchanged.
    """
    times = np.asarray(weights, dtype=np.float64).reshape(-1)
    out = np.empty((times.size,) + start.shape)
    for k in range(start.shape[0]):
        path = Slerp([0.0, 1.0], Rotation.from_matrix(np.stack([start[k], end[k]])))
        out[:, k] = path(times).as_matrix()
    out[times == 0.0] = start
    out[times == 1.0] = end
    return out


def slerp_pose(a: Pose, b: Pose, t: float) -> Pose:
    """Interpolate two poses: slerp on every local rotation, lerp on the rest.

    ``t = 0`` and ``t = 1`` return the endpoints exactly.
    """
    if a.K != b.K:
        raise KinematicsError(f"cannot interpolate poses with {a.K} and {b.K} joints")
    if not 0.0 <= t <= 1.0:
        raise KinematicsError(f"interpolation parameter must lie in [0, 1], got {t}")
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    return Pose(
        root_translation=(1.0 - t) * a.root_translation + t * b.root_translation,
        rotations=slerp_rotations(a.rotations, b.rotations, [t])[0],
        intensities=(1.0 - t) * a.intensities + t * b.intensities,
    )


def lerp_keypoints(x_a: np.ndarray, x_b: np.ndarray, t: float) -> np.ndarray:
    """Componentwise blend of two (K, 4) keypoint frames ``[x, y, z, alpha]``."""
    frame_a = np.asarray(x_a, dtype=np.float64)
    frame_b = np.asarray(x_b, dtype=np.float64)
    if frame_a.shape != frame_b.shape:
        raise KinematicsError(
            f"keypoint frames differ in shape: {frame_a.shape} vs {frame_b.shape}"
        )
    return (1.0 - t) * frame_a + t * frame_b


def _schedule(motion_length: int, start: int, end: int, steps: int | None) -> np.ndarray:
    if not 0 <= start < end < motion_length:
        raise KinematicsError(
            f"need 0 <= start < end < {motion_length}, got start={start}, end={end}"
        )
    count = end - start - 1 if steps is None else steps
    if count < 0:
        raise KinematicsError("steps must be >= 0")
    return np.linspace(0.0, 1.0, count + 2)


def slerp_motion(
    motion: MotionSequence, start: int, end: int, *, steps: int | None = None
) -> MotionSequence:
    """Replace frames between ``start`` and ``end`` by slerped poses.

    The result holds ``steps + 2`` frames (default: as many as the original
    span), the first and last being the keyframes themselves.
    """
    weights = _schedule(motion.T, start, end, steps)
    first, last = motion.pose(start), motion.pose(end)
    return MotionSequence.from_poses(
        motion.skeleton, [slerp_pose(first, last, float(t)) for t in weights]
    )


def interpolate_motion(
    motion: MotionSequence,
    start: int,
    end: int,
    *,
    steps: int | None = None,
    method: str = "slerp",
) -> KeypointTracks:
    """Joint positions for the in-between frames of ``motion``.

    ``slerp`` interpolates local rotations and runs FK; ``lerp`` blends the
    keyframe joint positions directly. Intensities are blended linearly in
    both cases.
    """
    if method == "slerp":
        between = slerp_motion(motion, start, end, steps=steps)
        joints = np.stack(
            [forward_kinematics(between.skeleton, pose) for pose in between.poses]
        )
        return KeypointTracks(mu=joints, alpha=between.intensities)
    if method == "lerp":
        weights = _schedule(motion.T, start, end, steps)
        keyframes = motion_joints(motion)[[start, end]]
        first = np.concatenate([keyframes[0], motion.intensities[start][:, None]], axis=1)
        last = np.concatenate([keyframes[1], motion.intensities[end][:, None]], axis=1)
        return KeypointTracks.from_frames(
            [lerp_keypoints(first, last, float(t)) for t in weights]
        )
    raise KinematicsError(f"unknown interpolation method {method!r}; use 'slerp' or 'lerp'")
