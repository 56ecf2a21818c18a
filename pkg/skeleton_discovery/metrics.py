"""Evaluation metrics: Chamfer distance, motion Chamfer and semantic consistency."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from skeleton_discovery.errors import MetricError
from skeleton_discovery.kinematics.fit import fit_pose_rotations
from skeleton_discovery.kinematics.fk import joint_transforms
from skeleton_discovery.kinematics.interpolate import slerp_pose
from skeleton_discovery.optimize import DescentSettings
from skeleton_discovery.types import (
    BBox,
    KeypointTracks,
    MetricReport,
    PointFrame,
    VoxelGrid,
    VoxelSequence,
)
from skeleton_discovery.voxelize.grid import (
    compute_shared_bbox,
    sample_points_from_voxels,
    voxel_difference,
    voxelize_sequence,
)
from skeleton_discovery.workers import map_ordered

if TYPE_CHECKING:
    from skeleton_discovery.synthgen import SyntheticRig

logger = logging.getLogger(__name__)

CONFIDENCE_LEVEL = 0.95
_PARALLEL_EPS = 1e-12


def _points(values: np.ndarray | PointFrame) -> np.ndarray:
    if isinstance(values, PointFrame):
        return values.points
    return np.asarray(values, dtype=np.float64).reshape(-1, 3)


def chamfer(p: np.ndarray | PointFrame, q: np.ndarray | PointFrame) -> float:
    """Mean squared nearest-neighbor distance P->Q plus Q->P."""
    first, second = _points(p), _points(q)
    if first.shape[0] == 0 or second.shape[0] == 0:
        raise MetricError("chamfer distance needs two non-empty point sets")
    forward, _ = cKDTree(second).query(first)
    backward, _ = cKDTree(first).query(second)
    return float(np.mean(forward**2) + np.mean(backward**2))


def _set_term(gt: PointFrame, pred: PointFrame, penalty: float) -> float:
    if gt.is_empty and pred.is_empty:
        return 0.0
    if gt.is_empty or pred.is_empty:
        return penalty
    return chamfer(gt, pred)


def _check_pair(gt: VoxelSequence, pred: VoxelSequence) -> None:
    if gt.frame_count != pred.frame_count:
        raise MetricError(
            f"sequences differ in length: {gt.frame_count} vs {pred.frame_count} frames"
        )
    if gt.resolution != pred.resolution:
        raise MetricError(f"resolution mismatch: {gt.resolution} vs {pred.resolution}")
    if not (
        np.array_equal(gt.bbox.minimum, pred.bbox.minimum)
        and np.array_equal(gt.bbox.maximum, pred.bbox.maximum)
    ):
        raise MetricError("sequences do not share a bounding box")


def _motion_term(job: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, BBox]) -> float:
    gt_now, gt_prev, pred_now, pred_prev, bbox = job
    penalty = bbox.diagonal**2
    gt_added, gt_removed = voxel_difference(VoxelGrid(gt_now), VoxelGrid(gt_prev), bbox)
    pred_added, pred_removed = voxel_difference(VoxelGrid(pred_now), VoxelGrid(pred_prev), bbox)
    return _set_term(gt_added, pred_added, penalty) + _set_term(gt_removed, pred_removed, penalty)


def motion_chamfer_terms(
    gt: VoxelSequence, pred: VoxelSequence, *, workers: int = 1
) -> np.ndarray:
    """Per-transition terms ``CD(V+, V^+) + CD(V-, V^-)``, (T-1,).

    A pair of empty difference sets contributes 0; a pair where only one
    side is empty contributes the squared bounding-box diagonal.
    """
    _check_pair(gt, pred)
    if gt.frame_count < 2:
        raise MetricError(f"motion chamfer needs T >= 2 frames, got {gt.frame_count}")
    jobs = [
        (gt.occupancy[t], gt.occupancy[t - 1], pred.occupancy[t], pred.occupancy[t - 1], gt.bbox)
        for t in range(1, gt.frame_count)
    ]
    return np.asarray(map_ordered(_motion_term, jobs, workers=workers), dtype=np.float64)


def motion_chamfer(gt: VoxelSequence, pred: VoxelSequence, *, workers: int = 1) -> float:
    return float(np.mean(motion_chamfer_terms(gt, pred, workers=workers)))


def tracking_chamfer_terms(gt: VoxelSequence, pred: VoxelSequence) -> np.ndarray:
    """Per-frame Chamfer between occupied-cell centers, same empty-set rules."""
    _check_pair(gt, pred)
    penalty = gt.bbox.diagonal**2
    return np.asarray(
        [
            _set_term(
                sample_points_from_voxels(gt.frame(t), gt.bbox),
                sample_points_from_voxels(pred.frame(t), pred.bbox),
                penalty,
            )
            for t in range(gt.frame_count)
        ],
        dtype=np.float64,
    )


def tracking_chamfer(gt: VoxelSequence, pred: VoxelSequence) -> float:
    return float(np.mean(tracking_chamfer_terms(gt, pred)))


def nearest_keypoints(pred: KeypointTracks, gt_joints: np.ndarray) -> np.ndarray:
    """Index of the closest keypoint to every ground-truth joint, (T, J)."""
    joints = np.asarray(gt_joints, dtype=np.float64)
    if joints.ndim != 3 or joints.shape[2] != 3:
        raise MetricError(f"ground-truth joints must be (T, J, 3), got {joints.shape}")
    if joints.shape[0] != pred.T:
        raise MetricError(f"keypoints have {pred.T} frames, ground truth has {joints.shape[0]}")
    if joints.shape[1] < 1 or pred.K < 1:
        raise MetricError("semantic consistency needs at least one joint and one keypoint")
    distances = np.sum((joints[:, :, None, :] - pred.mu[:, None, :, :]) ** 2, axis=-1)
    return np.argmin(distances, axis=-1)


def sc_per_joint(pred: KeypointTracks, gt_joints: np.ndarray) -> np.ndarray:
    """``max_k p_j(k)`` for every joint, where ``p_j`` is the nearest-keypoint histogram."""
    nearest = nearest_keypoints(pred, gt_joints)
    frames, count = nearest.shape
    best = np.empty(count)
    for joint in range(count):
        histogram = np.bincount(nearest[:, joint], minlength=pred.K)
        best[joint] = histogram.max() / frames
    return best


def sc_score(pred: KeypointTracks, gt_joints: np.ndarray) -> float:
    return float(np.mean(sc_per_joint(pred, gt_joints)))


def confidence_interval(values: Sequence[float], level: float = CONFIDENCE_LEVEL) -> float | None:
    """Student-t half-width of the mean, or ``None`` with fewer than two values."""
    data = np.asarray(values, dtype=np.float64)
    if data.size < 2:
        return None
    spread = float(np.std(data, ddof=1))
    return float(stats.t.ppf(0.5 * (1.0 + level), data.size - 1) * spread / np.sqrt(data.size))


def build_report(
    metric: str,
    per_frame: Sequence[float],
    *,
    value: float | None = None,
    details: dict[str, Any] | None = None,
) -> MetricReport:
    values = tuple(float(v) for v in per_frame)
    if value is None:
        if not values:
            raise MetricError(f"{metric}: no values to report")
        value = float(np.mean(values))
    return MetricReport(
        metric=metric,
        value=float(value),
        per_frame=values,
        ci_half_width=confidence_interval(values),
        details=dict(details or {}),
    )


def motion_chamfer_report(
    gt: VoxelSequence, pred: VoxelSequence, *, workers: int = 1
) -> MetricReport:
    return build_report("motion_chamfer", motion_chamfer_terms(gt, pred, workers=workers))


def tracking_chamfer_report(gt: VoxelSequence, pred: VoxelSequence) -> MetricReport:
    return build_report("tracking_chamfer", tracking_chamfer_terms(gt, pred))


def sc_report(pred: KeypointTracks, gt_joints: np.ndarray) -> MetricReport:
    per_joint = sc_per_joint(pred, gt_joints)
    return MetricReport(
        metric="sc_score",
        value=float(np.mean(per_joint)),
        ci_half_width=confidence_interval(per_joint),
        details={"per_joint": [float(v) for v in per_joint]},
    )


def shortest_arc(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Rotation matrices (n, 3, 3) turning each ``source`` direction onto ``target``."""
    a = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    rotvecs = np.zeros_like(a)
    for index, (u, v) in enumerate(zip(a, b)):
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu < _PARALLEL_EPS or nv < _PARALLEL_EPS:
            continue
        u, v = u / nu, v / nv
        axis = np.cross(u, v)
        sine, cosine = np.linalg.norm(axis), float(np.dot(u, v))
        if sine < _PARALLEL_EPS:
            if cosine > 0.0:
                continue
            # antiparallel: any axis perpendicular to u
            helper = np.eye(3)[int(np.argmin(np.abs(u)))]
            axis = np.cross(u, helper)
            rotvecs[index] = np.pi * axis / np.linalg.norm(axis)
            continue
        rotvecs[index] = np.arctan2(sine, cosine) * axis / sine
    return Rotation.from_rotvec(rotvecs).as_matrix()


def _carry(
    rest_points: np.ndarray,
    bones: np.ndarray,
    origin: np.ndarray,
    moved: np.ndarray,
    relative: np.ndarray,
) -> np.ndarray:
    local = rest_points - origin[bones]
    return moved[bones] + np.einsum("nij,nj->ni", relative[bones], local)


def interpolation_benchmark(
    rig: SyntheticRig,
    start: int,
    end: int,
    *,
    resolution: Sequence[int] | int = 32,
    padding: float = 0.1,
    fit_settings: DescentSettings | None = None,
) -> dict[str, float]:
    """Motion Chamfer of Slerp and Lerp in-betweens against the true surface.

    Poses are fitted to the true joints at ``start`` and ``end``, each
    refined from the rig's recorded pose: joints alone leave the twist about
    collinear bones and the rotation of a branching root undetermined. Slerp
    interpolates the fitted local rotations and runs FK; Lerp blends the
    keyframe joints and turns each bone by the shortest arc onto its blended
    direction. Both carry the ``start`` surface with their bone transforms.
    """
    if not 0 <= start < end < rig.motion.T:
        raise MetricError(f"need 0 <= start < end < {rig.motion.T}, got {start}, {end}")
    if end - start < 2:
        raise MetricError("interpolation needs at least one in-between frame")
    skeleton = rig.skeleton
    window = range(start, end + 1)
    truth = [PointFrame(rig.surface[t]) for t in window]
    bbox = compute_shared_bbox([PointFrame(frame) for frame in rig.surface], padding)
    gt_voxels = voxelize_sequence(truth, bbox, resolution)

    first, last = (
        fit_pose_rotations(
            skeleton, rig.joints[t], init=rig.motion.pose(t), settings=fit_settings
        ).pose
        for t in (start, end)
    )
    rest = joint_transforms(skeleton, first)
    rest_points = rig.surface[start]
    bones = rig.point_bones
    parents = skeleton.parents
    rest_bones = rest.positions - rest.positions[parents]
    end_positions = joint_transforms(skeleton, last).positions

    slerped: list[PointFrame] = []
    lerped: list[PointFrame] = []
    for t in np.linspace(0.0, 1.0, end - start + 1):
        posed = joint_transforms(skeleton, slerp_pose(first, last, float(t)))
        relative = np.einsum("kij,klj->kil", posed.rotations, rest.rotations)
        slerped.append(
            PointFrame(_carry(rest_points, bones, rest.positions, posed.positions, relative))
        )
        blended = (1.0 - t) * rest.positions + t * end_positions
        turned = shortest_arc(rest_bones, blended - blended[parents])
        lerped.append(PointFrame(_carry(rest_points, bones, rest.positions, blended, turned)))

    scores = {}
    for name, frames in (("slerp", slerped), ("lerp", lerped)):
        predicted = voxelize_sequence(frames, bbox, resolution, clip=True)
        scores[name] = motion_chamfer(gt_voxels, predicted)
    logger.info("interpolation M-CD: slerp %.6g, lerp %.6g", scores["slerp"], scores["lerp"])
    return scores
