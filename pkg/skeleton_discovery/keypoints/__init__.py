"""Keypoint placement public API."""

from __future__ import annotations

from skeleton_discovery.keypoints.heatmaps import (
    extract_tracks,
    gaussian_grid,
    gaussian_heatmaps,
    grid_centers,
    soft_argmax,
)
from skeleton_discovery.keypoints.losses import (
    nearest_keypoint,
    separation_loss,
    smoothness_loss,
    sparsity_loss,
    volume_fitting_loss,
)
from skeleton_discovery.keypoints.optimize import (
    KeypointConfig,
    KeypointObjective,
    farthest_point_sampling,
    initial_tracks,
    keypoint_losses,
    occupied_centers,
    optimize_keypoints,
)

__all__ = [
    "KeypointConfig",
    "KeypointObjective",
    "extract_tracks",
    "farthest_point_sampling",
    "gaussian_grid",
    "gaussian_heatmaps",
    "grid_centers",
    "initial_tracks",
    "keypoint_losses",
    "nearest_keypoint",
    "occupied_centers",
    "optimize_keypoints",
    "separation_loss",
    "smoothness_loss",
    "sparsity_loss",
    "volume_fitting_loss",
]
