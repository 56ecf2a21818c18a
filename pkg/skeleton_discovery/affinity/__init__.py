"""Affinity regression public API."""

from __future__ import annotations

from skeleton_discovery.affinity.losses import (
    combine_affinity,
    complexity_loss,
    consistency_losses,
    graph_trajectory_loss,
    pairwise_distances,
    pairwise_trajectory_costs,
    trajectory_cost,
)
from skeleton_discovery.affinity.optimize import (
    AffinityConfig,
    AffinityObjective,
    combine_with_mask,
    is_static,
    optimize_affinity,
    rows_to_matrices,
)

__all__ = [
    "AffinityConfig",
    "AffinityObjective",
    "combine_affinity",
    "combine_with_mask",
    "complexity_loss",
    "consistency_losses",
    "graph_trajectory_loss",
    "is_static",
    "optimize_affinity",
    "pairwise_distances",
    "pairwise_trajectory_costs",
    "rows_to_matrices",
    "trajectory_cost",
]
