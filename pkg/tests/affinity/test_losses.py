"""Tests for affinity graph losses."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from skeleton_discovery.affinity.losses import (
    combine_affinity,
    complexity_loss,
    consistency_losses,
    graph_trajectory_loss,
    pairwise_distances,
    pairwise_trajectory_costs,
    trajectory_cost,
)
from skeleton_discovery.errors import AffinityError
from skeleton_discovery.types import KeypointTracks

STEPS = np.arange(6.0)


def _curve(direction: list[float]) -> np.ndarray:
    return (STEPS**2)[:, None] * np.asarray(direction)


def test_trajectory_cost_extremes() -> None:
    curve = _curve([1.0, 0.0, 0.0])
    np.testing.assert_allclose(trajectory_cost(curve, 2.0 * curve), 0.0, atol=1e-12)
    np.testing.assert_allclose(trajectory_cost(curve, -curve), 1.0, atol=1e-12)
    np.testing.assert_allclose(trajectory_cost(curve, _curve([0.0, 1.0, 0.0])), 0.5)


def test_static_and_linear_tracks_fall_back_to_zero_cosine() -> None:
    still = np.zeros((5, 3))
    line = STEPS[:5, None] * np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(trajectory_cost(still, still), 0.5)
    # equal velocities, no acceleration
    np.testing.assert_allclose(trajectory_cost(line, line), 0.25)


def test_trajectory_cost_needs_three_frames() -> None:
    with pytest.raises(AffinityError, match="T >= 3"):
        trajectory_cost(np.zeros((2, 3)), np.zeros((2, 3)))


def test_pairwise_costs_match_single_pairs(rng: np.random.Generator) -> None:
    mu = rng.normal(size=(7, 3, 3))
    costs = pairwise_trajectory_costs(mu)
    assert costs.shape == (7, 3, 3)
    np.testing.assert_allclose(costs[:, 0, 2], trajectory_cost(mu[:, 0], mu[:, 2]))
    np.testing.assert_allclose(costs, costs.transpose(0, 2, 1))
    assert np.all((costs > -1e-12) & (costs < 1.0 + 1e-12))


def test_graph_trajectory_loss_is_linear(rng: np.random.Generator) -> None:
    tracks = KeypointTracks(mu=rng.normal(size=(5, 3, 3)), alpha=rng.uniform(size=(5, 3)))
    affinity = rng.uniform(size=(3, 3))
    value, coefficients = graph_trajectory_loss(affinity, tracks)
    assert value == pytest.approx(float(np.sum(affinity * coefficients)))
    costs = pairwise_trajectory_costs(tracks.mu)
    expected = np.einsum("tk,tkj->kj", tracks.alpha, costs) / (5 * 9)
    np.testing.assert_allclose(coefficients, expected)
    with pytest.raises(AffinityError, match=r"\(3, 3\)"):
        graph_trajectory_loss(np.ones((2, 2)), tracks)


def test_consistency_of_a_rigid_pair() -> None:
    base = _curve([0.1, 0.0, 0.0])
    mu = np.stack([base, base + np.array([0.0, 2.0, 0.0])], axis=1)
    tracks = KeypointTracks(mu=mu, alpha=np.ones((6, 2)))
    (local, local_grad), (time, time_grad) = consistency_losses(np.ones((2, 2)), tracks)
    np.testing.assert_allclose(pairwise_distances(mu)[:, 0, 1], 2.0)
    assert time == pytest.approx(0.0, abs=1e-20)
    np.testing.assert_allclose(local_grad, [[0.0, 0.5], [0.5, 0.0]])
    assert local == pytest.approx(1.0)
    np.testing.assert_allclose(time_grad, 0.0, atol=1e-20)


def test_consistency_needs_two_frames() -> None:
    tracks = KeypointTracks(mu=np.zeros((1, 2, 3)), alpha=np.ones((1, 2)))
    with pytest.raises(AffinityError, match="T >= 2"):
        consistency_losses(np.ones((2, 2)), tracks)


def test_complexity_vanishes_for_disjoint_supports() -> None:
    first = np.array([[0.0, 1.0], [0.0, 0.0]])
    second = np.array([[0.0, 0.0], [1.0, 0.0]])
    value, gradient = complexity_loss([first, second])
    assert value == 0.0
    np.testing.assert_array_equal(gradient, 0.0)
    assert complexity_loss([first])[0] == 0.0


def test_complexity_counts_ordered_pairs() -> None:
    ones = np.ones((2, 2))
    value, _ = complexity_loss([ones, ones])
    assert value == pytest.approx(2.0 * 2.0)


def test_complexity_gradient(
    rng: np.random.Generator, finite_difference: Callable[..., np.ndarray]
) -> None:
    matrices = rng.uniform(0.1, 1.0, size=(3, 4, 4))
    _, gradient = complexity_loss(matrices)
    numeric = finite_difference(lambda x: complexity_loss(x)[0], matrices)
    np.testing.assert_allclose(gradient, numeric, atol=1e-6)


def test_combine_takes_elementwise_max() -> None:
    first = np.array([[0.0, 0.7], [0.2, 0.0]])
    second = np.array([[0.0, 0.3], [0.8, 0.0]])
    np.testing.assert_array_equal(combine_affinity([first, second]), [[0.0, 0.7], [0.8, 0.0]])
    with pytest.raises(AffinityError, match="differ in shape"):
        combine_affinity([first, np.zeros((3, 3))])
