"""Shared bounding boxes, occupancy grids and cell-center sampling."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from skeleton_discovery.errors import VoxelizationError
from skeleton_discovery.types import BBox, PointFrame, VoxelGrid, VoxelSequence
from skeleton_discovery.workers import map_ordered

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION: tuple[int, int, int] = (64, 64, 64)
_MIN_HALF_WIDTH = 1e-6


def _resolution(value: Sequence[int] | int) -> tuple[int, int, int]:
    if isinstance(value, (int, np.integer)):
        value = (int(value),) * 3
    resolution = tuple(int(v) for v in value)
    if len(resolution) != 3 or min(resolution) < 1:
        raise VoxelizationError(f"resolution must be three positive integers, got {value}")
    return resolution  # type: ignore[return-value]


def compute_shared_bbox(frames: Sequence[PointFrame], padding: float = 0.0) -> BBox:
    """Axis-aligned box around every point of every frame.

    Each side grows by ``padding`` times the largest extent. Axes that stay
    thinner than the minimum width are widened symmetrically around their
    center.
    """
    if padding < 0.0:
        raise VoxelizationError(f"padding must be >= 0, got {padding}")
    populated = [frame.points for frame in frames if not frame.is_empty]
    if not populated:
        raise VoxelizationError("empty sequence")
    stacked = np.concatenate(populated, axis=0)
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    margin = padding * float((hi - lo).max())
    lo = lo - margin
    hi = hi + margin

    thin = (hi - lo) < 2.0 * _MIN_HALF_WIDTH
    if np.any(thin):
        half = max(margin, _MIN_HALF_WIDTH)
        center = 0.5 * (lo + hi)
        lo = np.where(thin, center - half, lo)
        hi = np.where(thin, center + half, hi)
    return BBox(minimum=lo, maximum=hi)


def cell_indices(
    points: np.ndarray,
    bbox: BBox,
    resolution: Sequence[int] | int,
    *,
    clip: bool = False,
    frame_index: int = 0,
) -> np.ndarray:
    """Integer cell index of every point using half-open cells.

    Points on the max face land in the last cell. With ``clip`` points outside
    the box are dropped instead of rejected.
    """
    shape = np.asarray(_resolution(resolution))
    normalized = bbox.normalize(points)
    outside = np.any((normalized < 0.0) | (normalized > 1.0), axis=1)
    if np.any(outside):
        if not clip:
            index = int(np.flatnonzero(outside)[0])
            raise VoxelizationError(
                f"frame {frame_index}: point {index} lies outside the bounding box"
            )
        normalized = normalized[~outside]
    indices = np.floor(normalized * shape).astype(np.int64)
    return np.minimum(indices, shape - 1)


def voxelize_frame(
    frame: PointFrame,
    bbox: BBox,
    resolution: Sequence[int] | int,
    *,
    clip: bool = False,
    frame_index: int = 0,
) -> VoxelGrid:
    shape = _resolution(resolution)
    occupancy = np.zeros(shape, dtype=bool)
    if not frame.is_empty:
        indices = cell_indices(
            frame.points, bbox, shape, clip=clip, frame_index=frame_index
        )
        occupancy[indices[:, 0], indices[:, 1], indices[:, 2]] = True
    return VoxelGrid(occupancy)


def _voxelize_job(job: tuple[int, PointFrame, BBox, tuple[int, int, int], bool]) -> np.ndarray:
    index, frame, bbox, shape, clip = job
    return voxelize_frame(frame, bbox, shape, clip=clip, frame_index=index).occupancy


def voxelize_sequence(
    frames: Sequence[PointFrame],
    bbox: BBox,
    resolution: Sequence[int] | int = DEFAULT_RESOLUTION,
    *,
    clip: bool = False,
    workers: int = 1,
) -> VoxelSequence:
    """Bin every frame into one occupancy grid over the shared ``bbox``."""
    if not frames:
        raise VoxelizationError("empty sequence")
    shape = _resolution(resolution)
    jobs = [(index, frame, bbox, shape, clip) for index, frame in enumerate(frames)]
    grids = map_ordered(_voxelize_job, jobs, workers=workers)
    empty = [index for index, grid in enumerate(grids) if not grid.any()]
    if empty:
        logger.debug("frames without occupied cells: %s", empty)
    return VoxelSequence(occupancy=np.stack(grids), bbox=bbox)


def cell_centers(indices: np.ndarray, resolution: Sequence[int], bbox: BBox) -> np.ndarray:
    """World coordinates of the centers of the given (M, 3) cell indices."""
    shape = np.asarray(_resolution(resolution), dtype=np.float64)
    return bbox.denormalize((np.asarray(indices, dtype=np.float64) + 0.5) / shape)


def sample_points_from_voxels(grid: VoxelGrid, bbox: BBox) -> PointFrame:
    """One point per occupied cell, at the cell center."""
    indices = np.argwhere(grid.occupancy)
    if indices.shape[0] == 0:
        return PointFrame(np.zeros((0, 3)), is_padding=True)
    return PointFrame(cell_centers(indices, grid.resolution, bbox))


def voxel_difference(
    v_t: VoxelGrid, v_prev: VoxelGrid, bbox: BBox
) -> tuple[PointFrame, PointFrame]:
    """Cell centers that appear (V+) and disappear (V-) between two frames."""
    if v_t.resolution != v_prev.resolution:
        raise VoxelizationError(
            f"resolution mismatch: {v_t.resolution} vs {v_prev.resolution}"
        )
    added = VoxelGrid(v_t.occupancy & ~v_prev.occupancy)
    removed = VoxelGrid(v_prev.occupancy & ~v_t.occupancy)
    return sample_points_from_voxels(added, bbox), sample_points_from_voxels(removed, bbox)
