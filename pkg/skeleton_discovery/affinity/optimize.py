"""Affinity regression from keypoint trajectories."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from skeleton_discovery.affinity.losses import (
    DEFAULT_VELOCITY_EPSILON,
    complexity_loss,
    consistency_losses,
    graph_trajectory_loss,
)
from skeleton_discovery.errors import AffinityError, ConfigError
from skeleton_discovery.optimize import DescentSettings, minimize
from skeleton_discovery.types import AffinitySet, KeypointTracks

logger = logging.getLogger(__name__)

_INIT_NOISE = 1e-3


@dataclass(frozen=True)
class AffinityConfig:
    neighbors: int = 2
    lambda_traj: float = 1.0
    lambda_local: float = 0.001
    lambda_time: float = 1.0
    lambda_complex: float = 0.01
    velocity_epsilon: float = DEFAULT_VELOCITY_EPSILON
    descent: DescentSettings = field(default_factory=DescentSettings)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.neighbors < 1:
            raise ConfigError("affinity.neighbors must be >= 1")
        weights = (self.lambda_traj, self.lambda_local, self.lambda_time, self.lambda_complex)
        if min(weights) < 0.0:
            raise ConfigError("affinity loss weights must be >= 0")
        if self.velocity_epsilon <= 0.0:
            raise ConfigError("affinity.velocity_epsilon must be > 0")


def rows_to_matrices(logits: np.ndarray) -> np.ndarray:
    """Row-softmax over (N, K, K-1) logits placed off the diagonal of (N, K, K)."""
    count = logits.shape[1]
    shifted = logits - logits.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    weights /= weights.sum(axis=-1, keepdims=True)
    matrices = np.zeros((logits.shape[0], count, count))
    matrices[:, ~np.eye(count, dtype=bool)] = weights.reshape(logits.shape[0], -1)
    return matrices


def combine_with_mask(matrices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise max and the one-hot (N, K, K) mask of the winning matrix.

    Ties go to the lowest matrix index.
    """
    winner = np.argmax(matrices, axis=0)
    mask = np.arange(matrices.shape[0])[:, None, None] == winner[None]
    return matrices.max(axis=0), mask


class AffinityObjective:
    """Weighted graph losses as a function of flat row logits."""

    def __init__(self, tracks: KeypointTracks, config: AffinityConfig) -> None:
        self.tracks = tracks
        self.config = config
        count = tracks.K
        self.shape = (config.neighbors, count, count - 1)
        zeros = np.zeros((count, count))
        _, self.trajectory = graph_trajectory_loss(zeros, tracks, config.velocity_epsilon)
        (_, self.local), (_, self.time) = consistency_losses(zeros, tracks)
        self.linear = (
            config.lambda_traj * self.trajectory
            + config.lambda_local * self.local
            + config.lambda_time * self.time
        )

    def terms(self, matrices: np.ndarray) -> dict[str, float]:
        combined, _ = combine_with_mask(matrices)
        return {
            "trajectory": float(np.sum(combined * self.trajectory)),
            "local": float(np.sum(combined * self.local)),
            "time": float(np.sum(combined * self.time)),
            "complexity": complexity_loss(matrices)[0],
        }

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        logits = x.reshape(self.shape)
        matrices = rows_to_matrices(logits)
        combined, mask = combine_with_mask(matrices)
        complexity, complexity_grad = complexity_loss(matrices)
        value = float(np.sum(combined * self.linear)) + self.config.lambda_complex * complexity

        grad_matrices = mask * self.linear[None] + self.config.lambda_complex * complexity_grad
        count = self.shape[1]
        off_diagonal = ~np.eye(count, dtype=bool)
        grad_rows = grad_matrices[:, off_diagonal].reshape(self.shape)
        probabilities = matrices[:, off_diagonal].reshape(self.shape)
        inner = np.sum(probabilities * grad_rows, axis=-1, keepdims=True)
        gradient = probabilities * (grad_rows - inner)
        return value, gradient.reshape(-1)


def is_static(tracks: KeypointTracks, epsilon: float = DEFAULT_VELOCITY_EPSILON) -> bool:
    """True when no keypoint ever moves faster than ``epsilon`` per frame."""
    speeds = np.linalg.norm(np.diff(tracks.mu, axis=0), axis=-1)
    return bool(np.all(speeds < epsilon))


def optimize_affinity(tracks: KeypointTracks, config: AffinityConfig) -> AffinitySet:
    """Regress ``config.neighbors`` row-stochastic affinity matrices from ``tracks``."""
    if tracks.K < 2:
        raise AffinityError(f"affinity needs K >= 2 keypoints, got {tracks.K}")
    if tracks.T < 3:
        raise AffinityError(f"affinity needs T >= 3 frames, got {tracks.T}")
    if config.neighbors >= tracks.K:
        raise AffinityError(
            f"neighbor count {config.neighbors} must be smaller than K = {tracks.K}"
        )
    degenerate = is_static(tracks, config.velocity_epsilon)
    if degenerate:
        logger.warning("all keypoint tracks are static; affinity reflects proximity only")

    objective = AffinityObjective(tracks, config)
    rng = np.random.default_rng(config.seed)
    start = _INIT_NOISE * rng.standard_normal(int(np.prod(objective.shape)))
    result = minimize(objective, start, config.descent)
    logger.info(
        "affinity objective %.6g -> %.6g in %d iterations",
        result.initial_value,
        result.value,
        result.iterations,
    )
    matrices = rows_to_matrices(result.x.reshape(objective.shape))
    combined, _ = combine_with_mask(matrices)
    return AffinitySet(matrices=matrices, combined=combined, degenerate=degenerate)
