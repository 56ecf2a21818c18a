"""Gaussian grid maps and heatmap-to-keypoint extraction."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from skeleton_discovery.errors import KeypointError
from skeleton_discovery.types import Heatmap, Keypoint, KeypointTracks

DEFAULT_SIGMA_G = 1.5


def _shape(resolution: Sequence[int]) -> tuple[int, int, int]:
    shape = tuple(int(v) for v in resolution)
    if len(shape) != 3 or min(shape) < 1:
        raise KeypointError(f"resolution must be three positive integers, got {resolution}")
    return shape  # type: ignore[return-value]


def grid_centers(resolution: Sequence[int]) -> np.ndarray:
    """Normalized cell centers, shaped (Gx, Gy, Gz, 3)."""
    axes = [(np.arange(size) + 0.5) / size for size in _shape(resolution)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def gaussian_grid(
    mu: np.ndarray,
    sigma_g: float = DEFAULT_SIGMA_G,
    resolution: Sequence[int] = (64, 64, 64),
) -> Heatmap:
    """Unnormalized Gaussian bump around ``mu`` (normalized coords).

    Distances are measured in cell units, so ``sigma_g`` is a width in cells.
    """
    if sigma_g <= 0.0:
        raise KeypointError(f"sigma_g must be > 0, got {sigma_g}")
    shape = np.asarray(_shape(resolution), dtype=np.float64)
    center = np.asarray(mu, dtype=np.float64).reshape(3) * shape
    cells = grid_centers(resolution) * shape
    squared = np.sum((cells - center) ** 2, axis=-1)
    return Heatmap(np.exp(-squared / (2.0 * sigma_g**2)))


def soft_argmax(heatmap: Heatmap) -> Keypoint:
    """Expected cell center under the heatmap normalized to unit mass.

    ``alpha`` is the peak value clamped to [0, 1]. An all-zero map yields the
    grid centroid with ``alpha = 0`` and the degenerate flag set.
    """
    values = heatmap.values
    total = float(values.sum())
    if total <= 0.0:
        return Keypoint(mu=np.full(3, 0.5), alpha=0.0, degenerate=True)
    weights = values / total
    centers = grid_centers(values.shape)
    mu = np.tensordot(weights, centers, axes=([0, 1, 2], [0, 1, 2]))
    alpha = float(np.clip(values.max(), 0.0, 1.0))
    return Keypoint(mu=mu, alpha=alpha)


def gaussian_heatmaps(
    tracks: KeypointTracks,
    sigma_g: float = DEFAULT_SIGMA_G,
    resolution: Sequence[int] = (64, 64, 64),
) -> np.ndarray:
    """Stack of (T, K, Gx, Gy, Gz) Gaussian maps, each scaled by its intensity."""
    shape = _shape(resolution)
    maps = np.empty((tracks.T, tracks.K, *shape))
    for t in range(tracks.T):
        for k in range(tracks.K):
            bump = gaussian_grid(tracks.mu[t, k], sigma_g, shape).values
            maps[t, k] = tracks.alpha[t, k] * bump
    return maps


def extract_tracks(heatmaps: np.ndarray) -> KeypointTracks:
    """Read one keypoint per (T, K, ...) heatmap with :func:`soft_argmax`."""
    values = np.asarray(heatmaps, dtype=np.float64)
    if values.ndim != 5:
        raise KeypointError(f"heatmaps must be (T, K, Gx, Gy, Gz), got {values.shape}")
    frames = []
    for t in range(values.shape[0]):
        points = [soft_argmax(Heatmap(values[t, k])) for k in range(values.shape[1])]
        frames.append(np.array([[*point.mu, point.alpha] for point in points]))
    return KeypointTracks.from_frames(frames)
