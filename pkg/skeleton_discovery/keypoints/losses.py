"""Keypoint losses with analytic gradients.

All functions take keypoint positions as a (T, K, 3) array in normalized
coordinates and return ``(value, gradient)`` with the gradient shaped like
the positions.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from skeleton_discovery.errors import KeypointError

DEFAULT_SIGMA_S = 1250.0


def _positions(mu: np.ndarray) -> np.ndarray:
    positions = np.asarray(mu, dtype=np.float64)
    if positions.ndim != 3 or positions.shape[2] != 3:
        raise KeypointError(f"keypoint positions must be (T, K, 3), got {positions.shape}")
    return positions


def nearest_keypoint(points: np.ndarray, keypoints: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of and squared distance to the nearest keypoint (ties to lowest index)."""
    squared = np.sum((points[:, None, :] - keypoints[None, :, :]) ** 2, axis=-1)
    nearest = np.argmin(squared, axis=1)
    return nearest, squared[np.arange(points.shape[0]), nearest]


def volume_fitting_loss(
    mu: np.ndarray, frames: Sequence[np.ndarray]
) -> tuple[float, np.ndarray]:
    """Mean over frames of the one-directional chamfer from points to keypoints."""
    positions = _positions(mu)
    if len(frames) != positions.shape[0]:
        raise KeypointError(f"{len(frames)} point frames for {positions.shape[0]} keypoint frames")
    count = positions.shape[0]
    value = 0.0
    gradient = np.zeros_like(positions)
    for t, points in enumerate(frames):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if points.shape[0] == 0:
            raise KeypointError(f"frame {t} has no occupied cells")
        nearest, squared = nearest_keypoint(points, positions[t])
        scale = 1.0 / (count * points.shape[0])
        value += float(squared.sum()) * scale
        np.add.at(gradient[t], nearest, 2.0 * scale * (positions[t][nearest] - points))
    return value, gradient


def sparsity_loss(heatmaps: np.ndarray) -> float:
    """Mean entrywise L1 norm over a (T, K, ...) stack of heatmaps."""
    values = np.asarray(heatmaps, dtype=np.float64)
    if values.ndim < 2 or values.shape[0] == 0 or values.shape[1] == 0:
        return 0.0
    return float(np.abs(values).sum() / (values.shape[0] * values.shape[1]))


def separation_loss(
    mu: np.ndarray, sigma_s: float = DEFAULT_SIGMA_S
) -> tuple[float, np.ndarray]:
    """Penalty on keypoints whose centered trajectories coincide."""
    positions = _positions(mu)
    frames, count, _ = positions.shape
    if count < 2:
        raise KeypointError("separation loss needs at least two keypoints")
    centered = positions - positions.mean(axis=0, keepdims=True)
    delta = centered[:, :, None, :] - centered[:, None, :, :]
    kernel = np.exp(-sigma_s * np.sum(delta * delta, axis=-1))
    off_diagonal = ~np.eye(count, dtype=bool)
    kernel = kernel * off_diagonal
    norm = frames * count * (count - 1)
    value = float(kernel.sum() / norm)

    grad_centered = -4.0 * sigma_s / norm * np.sum(kernel[..., None] * delta, axis=2)
    gradient = grad_centered - grad_centered.mean(axis=0, keepdims=True)
    return value, gradient


def smoothness_loss(mu: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared frame-to-frame keypoint displacement over ``K * (T - 1)`` steps."""
    positions = _positions(mu)
    step = np.diff(positions, axis=0)
    if step.size == 0:
        return 0.0, np.zeros_like(positions)
    scale = 1.0 / (step.shape[0] * step.shape[1])
    gradient = np.zeros_like(positions)
    gradient[1:] += 2.0 * scale * step
    gradient[:-1] -= 2.0 * scale * step
    return float(np.sum(step * step)) * scale, gradient
