"""Graph losses over affinity matrices.

The trajectory, local and time losses are linear in the combined affinity
matrix; each returns its value and the constant coefficient matrix that is
also its gradient.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from skeleton_discovery.errors import AffinityError
from skeleton_discovery.types import KeypointTracks

DEFAULT_VELOCITY_EPSILON = 1e-8


def _cosine(a: np.ndarray, b: np.ndarray, epsilon: float) -> np.ndarray:
    norm_a = np.linalg.norm(a, axis=-1)
    norm_b = np.linalg.norm(b, axis=-1)
    valid = (norm_a >= epsilon) & (norm_b >= epsilon)
    dot = np.sum(a * b, axis=-1)
    safe = np.where(valid, norm_a * norm_b, 1.0)
    return np.where(valid, dot / safe, 0.0)


def _motion_derivatives(positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward-difference velocities and central second differences, padded to T frames."""
    if positions.shape[0] < 3:
        raise AffinityError(f"trajectory cost needs T >= 3 frames, got {positions.shape[0]}")
    pad = [(0, 0)] * (positions.ndim - 1)
    velocity = np.pad(np.diff(positions, axis=0), [(0, 1), *pad], mode="edge")
    acceleration = np.pad(np.diff(positions, n=2, axis=0), [(1, 1), *pad], mode="edge")
    return velocity, acceleration


def trajectory_cost(
    track_a: np.ndarray,
    track_b: np.ndarray,
    epsilon: float = DEFAULT_VELOCITY_EPSILON,
) -> np.ndarray:
    """Per-frame dissimilarity in [0, 1] of two (T, 3) trajectories."""
    va, aa = _motion_derivatives(np.asarray(track_a, dtype=np.float64))
    vb, ab = _motion_derivatives(np.asarray(track_b, dtype=np.float64))
    return 0.5 - 0.25 * (_cosine(va, vb, epsilon) + _cosine(aa, ab, epsilon))


def pairwise_trajectory_costs(
    mu: np.ndarray, epsilon: float = DEFAULT_VELOCITY_EPSILON
) -> np.ndarray:
    """Trajectory cost of every keypoint pair, shaped (T, K, K)."""
    velocity, acceleration = _motion_derivatives(np.asarray(mu, dtype=np.float64))
    cos_v = _cosine(velocity[:, :, None, :], velocity[:, None, :, :], epsilon)
    cos_a = _cosine(acceleration[:, :, None, :], acceleration[:, None, :, :], epsilon)
    return 0.5 - 0.25 * (cos_v + cos_a)


def _check_square(matrix: np.ndarray, count: int) -> np.ndarray:
    values = np.asarray(matrix, dtype=np.float64)
    if values.shape != (count, count):
        raise AffinityError(f"affinity must be ({count}, {count}), got {values.shape}")
    return values


def graph_trajectory_loss(
    affinity: np.ndarray,
    tracks: KeypointTracks,
    epsilon: float = DEFAULT_VELOCITY_EPSILON,
) -> tuple[float, np.ndarray]:
    a = _check_square(affinity, tracks.K)
    costs = pairwise_trajectory_costs(tracks.mu, epsilon)
    coefficients = np.einsum("tk,tkj->kj", tracks.alpha, costs) / (tracks.T * tracks.K**2)
    return float(np.sum(a * coefficients)), coefficients


def pairwise_distances(mu: np.ndarray) -> np.ndarray:
    """Euclidean inter-keypoint distances, shaped (T, K, K)."""
    positions = np.asarray(mu, dtype=np.float64)
    return np.linalg.norm(positions[:, :, None, :] - positions[:, None, :, :], axis=-1)


def consistency_losses(
    affinity: np.ndarray, tracks: KeypointTracks
) -> tuple[tuple[float, np.ndarray], tuple[float, np.ndarray]]:
    """``((L_local, grad), (L_time, grad))`` for the combined affinity."""
    if tracks.T < 2:
        raise AffinityError(f"consistency losses need T >= 2 frames, got {tracks.T}")
    a = _check_square(affinity, tracks.K)
    lengths = pairwise_distances(tracks.mu)
    deviation = (lengths - lengths.mean(axis=0, keepdims=True)) ** 2
    norm = tracks.T * tracks.K**2
    local = np.einsum("tk,tkj->kj", tracks.alpha, lengths) / norm
    time = np.einsum("tk,tkj->kj", tracks.alpha, deviation) / norm
    return (float(np.sum(a * local)), local), (float(np.sum(a * time)), time)


def _stack(matrices: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    stacked = np.asarray(matrices, dtype=np.float64)
    if stacked.ndim != 3 or stacked.shape[1] != stacked.shape[2] or stacked.shape[0] < 1:
        raise AffinityError(
            f"expected a non-empty stack of square matrices, got shape {stacked.shape}"
        )
    return stacked


def complexity_loss(matrices: Sequence[np.ndarray] | np.ndarray) -> tuple[float, np.ndarray]:
    """Sum over ordered pairs ``n != n'`` of the Frobenius norm of ``A_n * A_n'``."""
    stacked = _stack(matrices)
    value = 0.0
    gradient = np.zeros_like(stacked)
    count = stacked.shape[0]
    for n in range(count):
        for m in range(n + 1, count):
            product = stacked[n] * stacked[m]
            norm = float(np.linalg.norm(product))
            value += 2.0 * norm
            if norm > 0.0:
                gradient[n] += 2.0 * product * stacked[m] / norm
                gradient[m] += 2.0 * product * stacked[n] / norm
    return value, gradient


def combine_affinity(matrices: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Elementwise maximum over the decomposed matrices."""
    try:
        stacked = np.stack([np.asarray(m, dtype=np.float64) for m in matrices])
    except ValueError as exc:
        raise AffinityError(f"affinity matrices differ in shape: {exc}") from exc
    return _stack(stacked).max(axis=0)
