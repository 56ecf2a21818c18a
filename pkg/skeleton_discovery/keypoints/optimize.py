"""Direct keypoint placement on a voxel sequence."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2

from skeleton_discovery.errors import ConfigError, KeypointError
from skeleton_discovery.keypoints.heatmaps import DEFAULT_SIGMA_G, gaussian_grid
from skeleton_discovery.keypoints.losses import (
    DEFAULT_SIGMA_S,
    separation_loss,
    smoothness_loss,
    volume_fitting_loss,
)
from skeleton_discovery.optimize import DescentSettings, minimize
from skeleton_discovery.types import KeypointTracks, VoxelSequence

logger = logging.getLogger(__name__)

_KMEANS_ITERATIONS = 20


@dataclass(frozen=True)
class KeypointConfig:
    """Keypoint count, loss weights and optimizer budget."""

    count: int = 8
    sigma_g: float = DEFAULT_SIGMA_G
    sigma_s: float = DEFAULT_SIGMA_S
    lambda_vol: float = 10.0
    lambda_sparse: float = 5.0
    lambda_sep: float = 0.1
    lambda_smooth: float | None = None
    descent: DescentSettings = field(default_factory=DescentSettings)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ConfigError("keypoints.count must be >= 1")
        if self.sigma_g <= 0.0 or self.sigma_s <= 0.0:
            raise ConfigError("keypoints.sigma_g and keypoints.sigma_s must be > 0")
        weights = (self.lambda_vol, self.lambda_sparse, self.lambda_sep)
        if min(weights) < 0.0 or (self.lambda_smooth is not None and self.lambda_smooth < 0.0):
            raise ConfigError("keypoint loss weights must be >= 0")

    @property
    def smooth_weight(self) -> float:
        if self.lambda_smooth is None:
            return 0.1 * self.lambda_vol
        return self.lambda_smooth


def occupied_centers(voxels: VoxelSequence) -> list[np.ndarray]:
    """Normalized centers of the occupied cells of every frame."""
    shape = np.asarray(voxels.resolution, dtype=np.float64)
    frames = []
    for t, grid in enumerate(voxels.occupancy):
        indices = np.argwhere(grid)
        if indices.shape[0] == 0:
            raise KeypointError(f"frame {t} has no occupied cells")
        frames.append((indices + 0.5) / shape)
    return frames


def farthest_point_sampling(points: np.ndarray, count: int, seed: int = 0) -> np.ndarray:
    """Greedy farthest-point subset of ``points``.

    The first pick is the point farthest from a seeded random point, so the
    extremities of the set come first and interior points after them.
    Returns ``count`` rows; when there are fewer distinct points than
    ``count`` the remaining picks repeat already chosen points.
    """
    cloud = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if cloud.shape[0] == 0:
        raise KeypointError("cannot sample from an empty point set")
    rng = np.random.default_rng(seed)
    anchor = cloud[int(rng.integers(cloud.shape[0]))]
    chosen = [int(np.argmax(np.sum((cloud - anchor) ** 2, axis=1)))]
    distance = np.sum((cloud - cloud[chosen[0]]) ** 2, axis=1)
    while len(chosen) < count:
        pick = int(np.argmax(distance))
        chosen.append(pick)
        distance = np.minimum(distance, np.sum((cloud - cloud[pick]) ** 2, axis=1))
    return cloud[chosen]


def _lloyd(points: np.ndarray, start: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        centers, _ = kmeans2(points, start, iter=_KMEANS_ITERATIONS, minit="matrix")
    for warning in caught:
        logger.warning("k-means refinement: %s", warning.message)
    return centers


def initial_tracks(frames: list[np.ndarray], config: KeypointConfig) -> np.ndarray:
    """Seed frame 1 by farthest-point sampling and propagate frame to frame."""
    current = _lloyd(frames[0], farthest_point_sampling(frames[0], config.count, config.seed))
    tracks = [current]
    for points in frames[1:]:
        current = _lloyd(points, current)
        tracks.append(current)
    return np.stack(tracks)


class KeypointObjective:
    """``lambda_vol*L_vol + lambda_sep*L_sep + lambda_smooth*smoothness`` over flat positions."""

    def __init__(self, frames: list[np.ndarray], config: KeypointConfig) -> None:
        self.frames = frames
        self.config = config
        self.shape = (len(frames), config.count, 3)

    def terms(self, mu: np.ndarray) -> dict[str, tuple[float, np.ndarray]]:
        cfg = self.config
        out = {
            "volume": volume_fitting_loss(mu, self.frames),
            "smoothness": smoothness_loss(mu),
        }
        if cfg.count >= 2:
            out["separation"] = separation_loss(mu, cfg.sigma_s)
        return out

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        mu = x.reshape(self.shape)
        weights = {
            "volume": self.config.lambda_vol,
            "separation": self.config.lambda_sep,
            "smoothness": self.config.smooth_weight,
        }
        value = 0.0
        gradient = np.zeros_like(mu)
        for name, (term, term_grad) in self.terms(mu).items():
            value += weights[name] * term
            gradient += weights[name] * term_grad
        return value, gradient.reshape(-1)


def optimize_keypoints(voxels: VoxelSequence, config: KeypointConfig) -> KeypointTracks:
    """Place ``config.count`` keypoints per frame by minimizing the keypoint losses.

    Positions are in normalized [0, 1] coordinates and every intensity is 1.
    """
    frames = occupied_centers(voxels)
    objective = KeypointObjective(frames, config)
    start = initial_tracks(frames, config)
    result = minimize(objective, start.reshape(-1), config.descent)
    logger.info(
        "keypoint objective %.6g -> %.6g in %d iterations",
        result.initial_value,
        result.value,
        result.iterations,
    )
    mu = result.x.reshape(objective.shape)
    return KeypointTracks(mu=mu, alpha=np.ones(mu.shape[:2]))


def keypoint_losses(
    tracks: KeypointTracks, voxels: VoxelSequence, config: KeypointConfig
) -> dict[str, float]:
    """Unweighted loss values of ``tracks``, including heatmap sparsity."""
    frames = occupied_centers(voxels)
    objective = KeypointObjective(frames, config)
    report = {name: value for name, (value, _) in objective.terms(tracks.mu).items()}
    mass = 0.0
    for t in range(tracks.T):
        for k in range(tracks.K):
            bump = gaussian_grid(tracks.mu[t, k], config.sigma_g, voxels.resolution).values
            mass += tracks.alpha[t, k] * float(bump.sum())
    report["sparsity"] = mass / (tracks.T * tracks.K)
    return report
