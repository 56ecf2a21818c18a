"""Skeleton extraction public API."""

from __future__ import annotations

from skeleton_discovery.skeleton.extract import (
    OFFSET_MODES,
    ParentGraph,
    SkeletonConfig,
    build_parent_graph,
    extract_skeleton,
    skeleton_offsets,
)
from skeleton_discovery.skeleton.graph import (
    NO_PATH,
    all_pairs_hops,
    assign_parents,
    binarize_affinity,
    edge_weights,
    ensure_connected,
    refine_graph,
    select_root,
)

__all__ = [
    "NO_PATH",
    "OFFSET_MODES",
    "ParentGraph",
    "SkeletonConfig",
    "all_pairs_hops",
    "assign_parents",
    "binarize_affinity",
    "build_parent_graph",
    "edge_weights",
    "ensure_connected",
    "extract_skeleton",
    "refine_graph",
    "select_root",
    "skeleton_offsets",
]
