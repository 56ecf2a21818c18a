"""Voxelization public API."""

from __future__ import annotations

from skeleton_discovery.voxelize.grid import (
    DEFAULT_RESOLUTION,
    cell_centers,
    cell_indices,
    compute_shared_bbox,
    sample_points_from_voxels,
    voxel_difference,
    voxelize_frame,
    voxelize_sequence,
)
from skeleton_discovery.voxelize.io import (
    decode_voxel_sequence,
    encode_voxel_sequence,
    list_point_files,
    read_point_frames,
    read_vertices,
    read_voxel_sequence,
    write_point_frame,
    write_voxel_sequence,
)

__all__ = [
    "DEFAULT_RESOLUTION",
    "cell_centers",
    "cell_indices",
    "compute_shared_bbox",
    "decode_voxel_sequence",
    "encode_voxel_sequence",
    "list_point_files",
    "read_point_frames",
    "read_vertices",
    "read_voxel_sequence",
    "sample_points_from_voxels",
    "voxel_difference",
    "voxelize_frame",
    "voxelize_sequence",
    "write_point_frame",
    "write_voxel_sequence",
]
