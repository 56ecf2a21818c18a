"""Tests for keypoint losses and their gradients."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from skeleton_discovery.errors import KeypointError
from skeleton_discovery.keypoints.losses import (
    nearest_keypoint,
    separation_loss,
    smoothness_loss,
    sparsity_loss,
    volume_fitting_loss,
)


def test_nearest_keypoint_ties_go_to_lowest_index() -> None:
    keypoints = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    nearest, squared = nearest_keypoint(np.zeros((1, 3)), keypoints)
    assert nearest.tolist() == [0]
    assert squared.tolist() == [1.0]


def test_volume_fitting_value() -> None:
    mu = np.zeros((1, 1, 3))
    points = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    value, _ = volume_fitting_loss(mu, [points])
    assert value == pytest.approx(2.5)


def test_volume_fitting_gradient(
    rng: np.random.Generator, finite_difference: Callable[..., np.ndarray]
) -> None:
    mu = rng.uniform(size=(3, 4, 3))
    frames = [rng.uniform(size=(20, 3)) for _ in range(3)]
    _, gradient = volume_fitting_loss(mu, frames)
    numeric = finite_difference(lambda x: volume_fitting_loss(x, frames)[0], mu)
    np.testing.assert_allclose(gradient, numeric, atol=1e-6)


def test_volume_fitting_rejects_empty_frames() -> None:
    with pytest.raises(KeypointError, match="frame 1 has no occupied cells"):
        volume_fitting_loss(np.zeros((2, 1, 3)), [np.ones((1, 3)), np.zeros((0, 3))])
    with pytest.raises(KeypointError, match="point frames"):
        volume_fitting_loss(np.zeros((2, 1, 3)), [np.ones((1, 3))])


def test_sparsity_is_mean_l1_mass() -> None:
    maps = np.ones((2, 3, 2, 2, 2))
    assert sparsity_loss(maps) == pytest.approx(8.0)
    assert sparsity_loss(np.zeros((0, 3, 2, 2, 2))) == 0.0


def test_separation_penalizes_coincident_trajectories() -> None:
    track = np.linspace(0.0, 1.0, 4)[:, None] * np.array([1.0, 0.0, 0.0])
    together = np.stack([track, track + 0.3], axis=1)
    value, gradient = separation_loss(together)
    # a constant offset vanishes after temporal centering
    assert value == pytest.approx(1.0)
    np.testing.assert_allclose(gradient, 0.0)
    apart = np.stack([track, -track], axis=1)
    assert separation_loss(apart)[0] < 1e-3


def test_separation_gradient(
    rng: np.random.Generator, finite_difference: Callable[..., np.ndarray]
) -> None:
    mu = rng.uniform(size=(4, 3, 3)) * 0.3
    _, gradient = separation_loss(mu, sigma_s=20.0)
    numeric = finite_difference(lambda x: separation_loss(x, sigma_s=20.0)[0], mu)
    np.testing.assert_allclose(gradient, numeric, atol=1e-6)


def test_separation_needs_two_keypoints() -> None:
    with pytest.raises(KeypointError, match="at least two"):
        separation_loss(np.zeros((3, 1, 3)))


def test_smoothness_value_and_gradient(
    rng: np.random.Generator, finite_difference: Callable[..., np.ndarray]
) -> None:
    assert smoothness_loss(np.ones((5, 2, 3)))[0] == 0.0
    assert smoothness_loss(np.ones((1, 2, 3)))[0] == 0.0
    mu = rng.normal(size=(4, 2, 3))
    _, gradient = smoothness_loss(mu)
    numeric = finite_difference(lambda x: smoothness_loss(x)[0], mu)
    np.testing.assert_allclose(gradient, numeric, atol=1e-6)


def test_smoothness_is_a_mean_over_steps() -> None:
    mu = np.zeros((3, 2, 3))
    mu[1:, 0, 0] = 1.0
    # one unit step out of four keypoint steps
    assert smoothness_loss(mu)[0] == pytest.approx(0.25)
    longer = np.concatenate([mu, np.tile(mu[-1:], (4, 1, 1))])
    assert smoothness_loss(longer)[0] == pytest.approx(1.0 / 12.0)


def test_positions_must_be_three_dimensional() -> None:
    with pytest.raises(KeypointError, match=r"\(T, K, 3\)"):
        smoothness_loss(np.zeros((4, 3)))
