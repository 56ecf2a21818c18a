"""Skeleton tree construction from affinity and keypoint tracks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from skeleton_discovery.errors import ConfigError, SkeletonError
from skeleton_discovery.skeleton.graph import (
    all_pairs_hops,
    assign_parents,
    binarize_affinity,
    ensure_connected,
    refine_graph,
    select_root,
)
from skeleton_discovery.types import KeypointTracks, SkeletonTree

logger = logging.getLogger(__name__)

OffsetMode = Literal["random", "observed"]
OFFSET_MODES: tuple[str, ...] = ("random", "observed")

_MIN_BONE = 1e-12


@dataclass(frozen=True)
class SkeletonConfig:
    neighbors: int = 2
    offset_mode: OffsetMode = "observed"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.neighbors < 1:
            raise ConfigError("skeleton.neighbors must be >= 1")
        if self.offset_mode not in OFFSET_MODES:
            raise ConfigError(
                f"skeleton.offset_mode must be one of {OFFSET_MODES}, got {self.offset_mode!r}"
            )


@dataclass(frozen=True, eq=False)
class ParentGraph:
    """Intermediate products of the affinity-to-tree extraction."""

    adjacency: np.ndarray
    hops: np.ndarray
    root: int
    weighted: np.ndarray
    rank: np.ndarray
    parents: np.ndarray
    bridges: int


def build_parent_graph(affinity: np.ndarray, neighbors: int) -> ParentGraph:
    adjacency = binarize_affinity(affinity, neighbors)
    hops = all_pairs_hops(adjacency)
    root = select_root(hops)
    connected, hops, root = ensure_connected(adjacency, hops, root)
    bridges = int((connected & ~adjacency).sum() // 2)
    if bridges:
        logger.info("added %d bridging edge(s) to connect the graph", bridges)
    weighted, rank = refine_graph(affinity, connected, hops, root)
    parents = assign_parents(rank, connected, affinity, root)
    return ParentGraph(
        adjacency=connected,
        hops=hops,
        root=root,
        weighted=weighted,
        rank=rank,
        parents=parents,
        bridges=bridges,
    )


def _random_directions(rng: np.random.Generator, count: int) -> np.ndarray:
    directions = rng.standard_normal((count, 3))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    # zero draws fall back to the x axis
    directions[norms[:, 0] == 0.0] = (1.0, 0.0, 0.0)
    norms[norms == 0.0] = 1.0
    return directions / norms


def skeleton_offsets(
    parents: np.ndarray,
    root: int,
    first_frame: np.ndarray,
    mode: OffsetMode = "observed",
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Unit offsets and first-frame-scaled offsets for every node.

    ``random`` draws seeded unit directions; ``observed`` normalizes the
    first-frame bone vectors and falls back to the seeded draw for bones of
    zero length. The root's offsets are zero.
    """
    positions = np.asarray(first_frame, dtype=np.float64)
    count = positions.shape[0]
    bones = positions - positions[parents]
    lengths = np.linalg.norm(bones, axis=1)
    unit = _random_directions(np.random.default_rng(seed), count)
    if mode == "observed":
        usable = lengths > _MIN_BONE
        unit[usable] = bones[usable] / lengths[usable, None]
    elif mode != "random":
        raise SkeletonError(f"unknown offset mode {mode!r}")
    unit[root] = 0.0
    lengths[root] = 0.0
    return unit, unit * lengths[:, None]


def extract_skeleton(
    affinity: np.ndarray,
    tracks: KeypointTracks,
    config: SkeletonConfig | None = None,
) -> SkeletonTree:
    """Rooted tree over the keypoints of ``tracks`` with first-frame-scaled offsets."""
    cfg = config or SkeletonConfig()
    a = np.asarray(affinity, dtype=np.float64)
    if a.shape != (tracks.K, tracks.K):
        raise SkeletonError(f"affinity must be ({tracks.K}, {tracks.K}), got {a.shape}")
    graph = build_parent_graph(a, cfg.neighbors)
    unit, offsets = skeleton_offsets(
        graph.parents, graph.root, tracks.mu[0], cfg.offset_mode, cfg.seed
    )
    return SkeletonTree(
        root=graph.root,
        parents=graph.parents,
        unit_offsets=unit,
        offsets=offsets,
        intensities=tracks.alpha.mean(axis=0),
    )


def rebase_offsets(
    skeleton: SkeletonTree,
    first_frame: np.ndarray,
    config: SkeletonConfig | None = None,
) -> SkeletonTree:
    """The same tree with offsets recomputed from ``first_frame``.

    Used to carry a skeleton extracted in normalized coordinates over to the
    world frame, where a per-axis rescale would bend its bone directions.
    """
    cfg = config or SkeletonConfig()
    positions = np.asarray(first_frame, dtype=np.float64)
    if positions.shape != (skeleton.K, 3):
        raise SkeletonError(f"first frame must be ({skeleton.K}, 3), got {positions.shape}")
    unit, offsets = skeleton_offsets(
        skeleton.parents, skeleton.root, positions, cfg.offset_mode, cfg.seed
    )
    return SkeletonTree(
        root=skeleton.root,
        parents=skeleton.parents,
        unit_offsets=unit,
        offsets=offsets,
        intensities=skeleton.intensities,
    )
