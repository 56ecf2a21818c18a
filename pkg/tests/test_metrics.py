"""Tests for evaluation metrics."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from skeleton_discovery.errors import MetricError
from skeleton_discovery.metrics import (
    build_report,
    chamfer,
    confidence_interval,
    interpolation_benchmark,
    motion_chamfer,
    motion_chamfer_report,
    motion_chamfer_terms,
    nearest_keypoints,
    sc_per_joint,
    sc_report,
    sc_score,
    shortest_arc,
    tracking_chamfer,
    tracking_chamfer_terms,
)
from skeleton_discovery.synthgen import SyntheticRig, make_chain_rig, make_star_rig
from skeleton_discovery.types import BBox, KeypointTracks, PointFrame, VoxelSequence

UNIT_BOX = BBox(np.zeros(3), np.ones(3))


def _brute_chamfer(p: np.ndarray, q: np.ndarray) -> float:
    squared = np.sum((p[:, None, :] - q[None, :, :]) ** 2, axis=-1)
    return float(squared.min(axis=1).mean() + squared.min(axis=0).mean())


def _sequence(cells: list[list[tuple[int, int, int]]], size: int = 4) -> VoxelSequence:
    occupancy = np.zeros((len(cells), size, size, size), dtype=bool)
    for t, frame in enumerate(cells):
        for cell in frame:
            occupancy[(t, *cell)] = True
    return VoxelSequence(occupancy=occupancy, bbox=UNIT_BOX)


def test_chamfer_matches_brute_force(rng: np.random.Generator) -> None:
    for _ in range(3):
        p = rng.normal(size=(40, 3))
        q = rng.normal(size=(25, 3))
        assert chamfer(p, q) == pytest.approx(_brute_chamfer(p, q))
        assert chamfer(PointFrame(p), PointFrame(q)) == pytest.approx(chamfer(q, p))


def test_chamfer_of_identical_sets_is_zero(rng: np.random.Generator) -> None:
    p = rng.normal(size=(10, 3))
    assert chamfer(p, p) == 0.0
    with pytest.raises(MetricError, match="non-empty"):
        chamfer(p, np.zeros((0, 3)))


def test_motion_chamfer_of_identical_motion_is_zero() -> None:
    moving = _sequence([[(0, 0, 0)], [(1, 0, 0)], [(2, 0, 0)]])
    np.testing.assert_array_equal(motion_chamfer_terms(moving, moving), [0.0, 0.0])
    assert motion_chamfer(moving, moving) == 0.0


def test_motion_chamfer_penalizes_missing_motion() -> None:
    moving = _sequence([[(0, 0, 0)], [(1, 0, 0)]])
    still = _sequence([[(0, 0, 0)], [(0, 0, 0)]])
    penalty = UNIT_BOX.diagonal**2
    # one-sided V+ and V- each cost the squared diagonal
    np.testing.assert_allclose(motion_chamfer_terms(moving, still), [2.0 * penalty])
    np.testing.assert_allclose(motion_chamfer_terms(still, still), [0.0])


def test_motion_chamfer_measures_displacement_of_changes() -> None:
    gt = _sequence([[(0, 0, 0)], [(1, 0, 0)]])
    pred = _sequence([[(0, 0, 0)], [(2, 0, 0)]])
    # V+ centers differ by one cell (0.25); V- sets coincide
    expected = 2.0 * 0.25**2
    assert motion_chamfer(gt, pred) == pytest.approx(expected)
    assert motion_chamfer(gt, pred, workers=2) == pytest.approx(expected)


def test_motion_chamfer_checks_its_inputs() -> None:
    two = _sequence([[(0, 0, 0)], [(1, 0, 0)]])
    with pytest.raises(MetricError, match="differ in length"):
        motion_chamfer(two, _sequence([[(0, 0, 0)]] * 3))
    with pytest.raises(MetricError, match="resolution mismatch"):
        motion_chamfer(two, _sequence([[(0, 0, 0)], [(1, 0, 0)]], size=5))
    shifted = VoxelSequence(two.occupancy, BBox(np.zeros(3), np.full(3, 2.0)))
    with pytest.raises(MetricError, match="bounding box"):
        motion_chamfer(two, shifted)
    one = _sequence([[(0, 0, 0)]])
    with pytest.raises(MetricError, match="T >= 2"):
        motion_chamfer(one, one)


def test_tracking_chamfer() -> None:
    gt = _sequence([[(0, 0, 0)], [(1, 1, 1)]])
    pred = _sequence([[(0, 0, 0)], []])
    np.testing.assert_allclose(tracking_chamfer_terms(gt, pred), [0.0, UNIT_BOX.diagonal**2])
    assert tracking_chamfer(gt, gt) == 0.0


def test_semantic_consistency_of_exact_keypoints(rng: np.random.Generator) -> None:
    joints = rng.normal(size=(5, 3, 3))
    tracks = KeypointTracks(mu=joints, alpha=np.ones((5, 3)))
    np.testing.assert_array_equal(nearest_keypoints(tracks, joints), np.tile([0, 1, 2], (5, 1)))
    assert sc_score(tracks, joints) == 1.0


def test_semantic_consistency_of_swapping_keypoints() -> None:
    joints = np.zeros((4, 1, 3))
    left = np.array([-1.0, 0.0, 0.0])
    right = np.array([1.0, 0.0, 0.0])
    near = np.array([0.1, 0.0, 0.0])
    frames = [[near, right], [near, right], [left, near], [left, near]]
    tracks = KeypointTracks(mu=np.array(frames), alpha=np.ones((4, 2)))
    np.testing.assert_allclose(sc_per_joint(tracks, joints), [0.5])


def test_nearest_keypoint_ties_and_errors() -> None:
    tracks = KeypointTracks(
        mu=np.array([[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]]), alpha=np.ones((1, 2))
    )
    assert nearest_keypoints(tracks, np.zeros((1, 1, 3))).tolist() == [[0]]
    with pytest.raises(MetricError, match="frames"):
        nearest_keypoints(tracks, np.zeros((2, 1, 3)))
    with pytest.raises(MetricError, match=r"\(T, J, 3\)"):
        nearest_keypoints(tracks, np.zeros((1, 3)))


def test_confidence_interval() -> None:
    assert confidence_interval([1.0]) is None
    half = confidence_interval([1.0, 2.0, 3.0])
    assert half == pytest.approx(stats.t.ppf(0.975, 2) * 1.0 / np.sqrt(3.0))
    assert confidence_interval([2.0, 2.0, 2.0]) == 0.0


def test_reports() -> None:
    report = build_report("tracking_chamfer", [1.0, 3.0])
    assert report.value == 2.0
    assert report.ci_half_width is not None
    frame = report.to_frame()
    assert list(frame.columns) == ["frame", "tracking_chamfer"]
    assert frame["tracking_chamfer"].tolist() == [1.0, 3.0]
    with pytest.raises(MetricError, match="no values"):
        build_report("empty", [])
    moving = _sequence([[(0, 0, 0)], [(1, 0, 0)], [(2, 0, 0)]])
    assert motion_chamfer_report(moving, moving).per_frame == (0.0, 0.0)


def test_sc_report_lists_joints(rng: np.random.Generator) -> None:
    joints = rng.normal(size=(3, 2, 3))
    report = sc_report(KeypointTracks(mu=joints, alpha=np.ones((3, 2))), joints)
    assert report.metric == "sc_score"
    assert report.details == {"per_joint": [1.0, 1.0]}
    assert report.per_frame == ()


def test_shortest_arc_turns_directions(rng: np.random.Generator) -> None:
    source = rng.normal(size=(6, 3))
    target = rng.normal(size=(6, 3))
    source[4] = [0.0, 0.0, 2.0]
    target[4] = [0.0, 0.0, -1.0]
    target[5] = 3.0 * source[5]
    rotations = shortest_arc(source, target)
    turned = np.einsum("nij,nj->ni", rotations, source)
    unit = target / np.linalg.norm(target, axis=1, keepdims=True)
    np.testing.assert_allclose(
        turned / np.linalg.norm(source, axis=1, keepdims=True), unit, atol=1e-9
    )
    np.testing.assert_allclose(rotations[5], np.eye(3), atol=1e-12)
    np.testing.assert_allclose(shortest_arc(np.zeros(3), np.ones(3))[0], np.eye(3))


def test_interpolation_benchmark_scores_both_methods(small_chain_rig: SyntheticRig) -> None:
    scores = interpolation_benchmark(small_chain_rig, 0, 4, resolution=16)
    assert set(scores) == {"slerp", "lerp"}
    assert all(np.isfinite(v) and v >= 0.0 for v in scores.values())
    with pytest.raises(MetricError, match="in-between"):
        interpolation_benchmark(small_chain_rig, 0, 1)
    with pytest.raises(MetricError, match="start < end"):
        interpolation_benchmark(small_chain_rig, 3, 9)


def test_interpolation_of_a_still_rig_is_exact() -> None:
    rig = make_chain_rig(segments=2, frames=5, motion_amplitude=0.0, points_per_bone=40)
    scores = interpolation_benchmark(rig, 0, 4, resolution=16)
    assert scores == {"slerp": 0.0, "lerp": 0.0}


@pytest.mark.slow
def test_slerp_in_betweens_beat_lerp_on_most_rigs() -> None:
    wins = 0
    for seed in range(25):
        for build in (make_chain_rig, make_star_rig):
            rig = build(frames=12, seed=seed)
            scores = interpolation_benchmark(rig, 0, 10, resolution=24)
            wins += scores["slerp"] <= scores["lerp"]
    assert wins >= 35
