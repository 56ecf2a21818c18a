"""Least-squares recovery of pose rotations from joint positions."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from skeleton_discovery.errors import KinematicsError
from skeleton_discovery.kinematics.rotations import matrix_to_rot6d, rot6d_to_matrix, rot6d_vjp
from skeleton_discovery.optimize import DescentSettings, minimize
from skeleton_discovery.types import KeypointTracks, MotionSequence, Pose, SkeletonTree
from skeleton_discovery.workers import map_ordered

logger = logging.getLogger(__name__)

DEFAULT_FIT_SETTINGS = DescentSettings(max_iterations=500, initial_step=1.0)


@dataclass(frozen=True, eq=False)
class PoseFit:
    """Fitted pose with its weighted squared residual."""

    pose: Pose
    residual: float
    iterations: int
    converged: bool


class _FitObjective:
    """Weighted squared joint error as a function of ``[t, 6D_0, ..., 6D_{K-1}]``."""

    def __init__(self, skeleton: SkeletonTree, target: np.ndarray, weights: np.ndarray) -> None:
        self.skeleton = skeleton
        self.target = target
        self.weights = weights

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        skeleton = self.skeleton
        count = skeleton.K
        root = skeleton.root
        parents = skeleton.parents
        offsets = skeleton.offsets
        sixd = x[3:].reshape(count, 6)
        try:
            local = rot6d_to_matrix(sixd)
        except KinematicsError:
            return float("inf"), np.zeros_like(x)

        rotations = np.empty((count, 3, 3))
        positions = np.empty((count, 3))
        for node in skeleton.order:
            if node == root:
                rotations[node] = local[node]
                positions[node] = x[:3]
            else:
                parent = parents[node]
                rotations[node] = rotations[parent] @ local[node]
                positions[node] = positions[parent] + rotations[node] @ offsets[node]

        residual = positions - self.target
        value = float(np.sum(self.weights * np.sum(residual * residual, axis=1)))

        grad_positions = 2.0 * self.weights[:, None] * residual
        grad_rotations = np.zeros((count, 3, 3))
        grad_local = np.zeros((count, 3, 3))
        grad_translation = np.zeros(3)
        for node in reversed(skeleton.order):
            if node == root:
                grad_translation = grad_positions[node]
                grad_local[node] = grad_rotations[node]
                continue
            parent = parents[node]
            grad_rotations[node] += np.outer(grad_positions[node], offsets[node])
            grad_positions[parent] += grad_positions[node]
            grad_local[node] = rotations[parent].T @ grad_rotations[node]
            grad_rotations[parent] += grad_rotations[node] @ local[node].T

        gradient = np.empty_like(x)
        gradient[:3] = grad_translation
        for node in range(count):
            gradient[3 + 6 * node : 9 + 6 * node] = rot6d_vjp(sixd[node], grad_local[node])
        return value, gradient


def fit_pose_rotations(
    skeleton: SkeletonTree,
    target: np.ndarray,
    *,
    weights: np.ndarray | None = None,
    intensities: np.ndarray | None = None,
    init: Pose | None = None,
    settings: DescentSettings | None = None,
) -> PoseFit:
    """Fit root translation and local rotations so FK matches ``target``.

    Minimizes ``sum_k w_k * ||FK(pose)_k - target_k||^2``. Without ``init`` the
    search starts from identity rotations with the root placed on its target.
    ``intensities`` are carried into the returned pose unchanged.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (skeleton.K, 3) or not np.all(np.isfinite(target)):
        raise KinematicsError(f"target must be {skeleton.K} finite 3D positions")
    w = np.ones(skeleton.K) if weights is None else np.asarray(weights, dtype=np.float64)
    carried = (
        np.ones(skeleton.K) if intensities is None else np.asarray(intensities, dtype=np.float64)
    )
    start = init or Pose.identity(skeleton.K, root_translation=target[skeleton.root])

    x0 = np.concatenate([start.root_translation, matrix_to_rot6d(start.rotations).reshape(-1)])
    result = minimize(_FitObjective(skeleton, target, w), x0, settings or DEFAULT_FIT_SETTINGS)
    if not result.converged:
        logger.info("pose fit stopped at the iteration budget; residual %.3g", result.value)

    pose = Pose(
        root_translation=result.x[:3],
        rotations=rot6d_to_matrix(result.x[3:].reshape(skeleton.K, 6)),
        intensities=carried,
    )
    return PoseFit(
        pose=pose,
        residual=result.value,
        iterations=result.iterations,
        converged=result.converged,
    )


def _fit_frame(job: tuple[SkeletonTree, np.ndarray, np.ndarray, DescentSettings]) -> PoseFit:
    skeleton, target, alpha, settings = job
    return fit_pose_rotations(
        skeleton, target, weights=alpha, intensities=alpha, settings=settings
    )


def fit_motion(
    skeleton: SkeletonTree,
    tracks: KeypointTracks,
    *,
    settings: DescentSettings | None = None,
    workers: int = 1,
    progress: bool = False,
) -> tuple[MotionSequence, list[PoseFit]]:
    """Fit every frame of ``tracks`` independently and stack the poses.

    ``progress`` shows a per-frame tqdm bar.
    """
    if tracks.K != skeleton.K:
        raise KinematicsError(f"tracks have {tracks.K} keypoints, skeleton has {skeleton.K}")
    cfg = settings or DEFAULT_FIT_SETTINGS
    jobs = [(skeleton, tracks.mu[t], tracks.alpha[t], cfg) for t in range(tracks.T)]
    fits = map_ordered(
        _fit_frame, jobs, workers=workers, progress=progress, desc="Fitting", unit="frame"
    )
    motion = MotionSequence.from_poses(skeleton, [fit.pose for fit in fits])
    return motion, fits
