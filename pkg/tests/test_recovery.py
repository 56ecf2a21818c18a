"""End-to-end skeleton recovery on seeded synthetic rigs."""

from __future__ import annotations

import numpy as np
import pytest

from skeleton_discovery.affinity.optimize import AffinityConfig, optimize_affinity
from skeleton_discovery.keypoints.optimize import KeypointConfig, optimize_keypoints
from skeleton_discovery.metrics import sc_score
from skeleton_discovery.skeleton.extract import SkeletonConfig, extract_skeleton
from skeleton_discovery.synthgen import SyntheticRig, make_chain_rig, make_star_rig
from skeleton_discovery.types import KeypointTracks, PointFrame, SkeletonTree
from skeleton_discovery.voxelize.grid import compute_shared_bbox, voxelize_sequence

pytestmark = pytest.mark.slow

GRID = 32
KEYPOINTS = 8
# weights for short, evenly sampled synthetic sequences
AFFINITY = AffinityConfig(neighbors=2, lambda_traj=1e-3, lambda_local=1.0, lambda_time=10.0)


def _rigs() -> list[SyntheticRig]:
    chains = [make_chain_rig(segments=3, frames=20, seed=seed) for seed in range(20)]
    stars = [make_star_rig(arms=3, frames=20, seed=seed) for seed in range(10)]
    return chains + stars


def _recover(rig: SyntheticRig) -> tuple[KeypointTracks, SkeletonTree]:
    frames = [PointFrame(points) for points in rig.surface]
    bbox = compute_shared_bbox(frames, padding=0.05)
    voxels = voxelize_sequence(frames, bbox, GRID)
    tracks = optimize_keypoints(voxels, KeypointConfig(count=KEYPOINTS))
    affinity = optimize_affinity(tracks, AFFINITY)
    skeleton = extract_skeleton(affinity.combined, tracks, SkeletonConfig(neighbors=2))
    world = KeypointTracks(mu=bbox.denormalize(tracks.mu), alpha=tracks.alpha)
    return world, skeleton


def _edges(parents: np.ndarray, root: int, labels: np.ndarray) -> set[frozenset[int]]:
    edges = set()
    for node, parent in enumerate(parents):
        if node != root and labels[node] != labels[parent]:
            edges.add(frozenset((int(labels[node]), int(labels[parent]))))
    return edges


def edge_discrepancy(tracks: KeypointTracks, skeleton: SkeletonTree, rig: SyntheticRig) -> int:
    """Edges missing or extra after collapsing keypoints onto their modal nearest joint."""
    distance = np.linalg.norm(tracks.mu[:, :, None, :] - rig.joints[:, None, :, :], axis=-1)
    nearest = np.argmin(distance, axis=2)
    labels = np.array(
        [np.bincount(column, minlength=rig.skeleton.K).argmax() for column in nearest.T]
    )
    predicted = _edges(skeleton.parents, skeleton.root, labels)
    truth = _edges(rig.skeleton.parents, rig.skeleton.root, np.arange(rig.skeleton.K))
    return len(predicted ^ truth)


@pytest.fixture(scope="module")
def recovered() -> list[tuple[float, int]]:
    results = []
    for rig in _rigs():
        tracks, skeleton = _recover(rig)
        results.append((sc_score(tracks, rig.joints), edge_discrepancy(tracks, skeleton, rig)))
    return results


def test_keypoints_cover_the_joints(recovered: list[tuple[float, int]]) -> None:
    assert np.mean([score for score, _ in recovered]) >= 0.9


def test_adjacency_is_recovered_within_one_edge(recovered: list[tuple[float, int]]) -> None:
    close = [discrepancy <= 1 for _, discrepancy in recovered]
    assert np.mean(close) >= 0.9


def test_edge_discrepancy_of_a_perfect_recovery_is_zero() -> None:
    rig = make_chain_rig(segments=3, frames=4, seed=0)
    tracks = KeypointTracks(mu=rig.joints, alpha=np.ones(rig.joints.shape[:2]))
    assert edge_discrepancy(tracks, rig.skeleton, rig) == 0
