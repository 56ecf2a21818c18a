"""Affinity matrix to parent-child graph.

Steps: binarize the affinity into a symmetric adjacency, pick the node with
the smallest hop-distance sum as root, bridge disconnected components,
rank nodes by affinity-weighted distance to the root, then give every node
its closest higher-ranked neighbor as parent, with the same-rank rule
deciding between siblings and chains.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, csgraph_from_dense, dijkstra, shortest_path

from skeleton_discovery.errors import SkeletonError

logger = logging.getLogger(__name__)

NO_PATH = 1e4
AFFINITY_FLOOR = 1e-12
RANK_TOLERANCE = 1e-9


def _square(matrix: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(matrix)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise SkeletonError(f"{name} must be a square matrix, got shape {values.shape}")
    return values


def binarize_affinity(affinity: np.ndarray, neighbors: int) -> np.ndarray:
    """Keep the ``neighbors`` strongest off-diagonal entries per row, OR-symmetrized."""
    a = _square(affinity, "affinity").astype(np.float64)
    count = a.shape[0]
    if count < 2:
        raise SkeletonError(f"need at least two nodes, got {count}")
    if not 1 <= neighbors < count:
        raise SkeletonError(f"neighbor count must satisfy 1 <= N < K, got N={neighbors}, K={count}")
    adjacency = np.zeros((count, count), dtype=bool)
    for i in range(count):
        columns = np.array([j for j in range(count) if j != i])
        order = np.argsort(-a[i, columns], kind="stable")
        adjacency[i, columns[order[:neighbors]]] = True
    return adjacency | adjacency.T


def all_pairs_hops(adjacency: np.ndarray) -> np.ndarray:
    """Unweighted hop counts with ``NO_PATH`` between disconnected nodes."""
    adj = _square(adjacency, "adjacency").astype(bool)
    hops = shortest_path(csr_matrix(adj.astype(np.float64)), directed=False, unweighted=True)
    hops[~np.isfinite(hops)] = NO_PATH
    return hops


def select_root(distances: np.ndarray) -> int:
    """Node with the smallest distance sum; ties go to the lowest index."""
    return int(np.argmin(_square(distances, "distances").sum(axis=1)))


def ensure_connected(
    adjacency: np.ndarray, distances: np.ndarray, root: int
) -> tuple[np.ndarray, np.ndarray, int]:
    """Bridge components to the root's component until the graph is connected."""
    adj = _square(adjacency, "adjacency").astype(bool).copy()
    dists = np.asarray(distances, dtype=np.float64)
    components, labels = connected_components(csr_matrix(adj), directed=False)
    while components > 1:
        outside = np.flatnonzero(labels != labels[root])
        sums = dists.sum(axis=1)
        other = int(outside[np.argmin(sums[outside])])
        adj[root, other] = adj[other, root] = True
        logger.debug("bridging node %d to root %d", other, root)
        dists = all_pairs_hops(adj)
        root = select_root(dists)
        components, labels = connected_components(csr_matrix(adj), directed=False)
    return adj, dists, root


def edge_weights(affinity: np.ndarray, adjacency: np.ndarray) -> np.ndarray:
    """``-ln(a_ij)`` on existing edges (floored affinity), ``inf`` elsewhere."""
    a = np.clip(np.asarray(affinity, dtype=np.float64), AFFINITY_FLOOR, 1.0)
    weights = np.full(a.shape, np.inf)
    adj = np.asarray(adjacency, dtype=bool)
    weights[adj] = -np.log(a[adj])
    np.fill_diagonal(weights, np.inf)
    return weights


def _dense_groups(values: np.ndarray, tolerance: float) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    groups = np.empty(values.shape[0], dtype=np.int64)
    group = 0
    previous = values[order[0]]
    for position, node in enumerate(order):
        value = values[node]
        if position and value - previous > tolerance * max(abs(previous), abs(value), 1.0):
            group += 1
        groups[node] = group
        previous = value
    return groups


def refine_graph(
    affinity: np.ndarray,
    adjacency: np.ndarray,
    distances: np.ndarray,
    root: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Affinity-weighted all-pairs distances and each node's rank toward the root.

    The root alone has rank 1. Other nodes are dense-ranked by weighted
    distance to the root, equal within ``RANK_TOLERANCE`` counting as equal;
    such ties are split by depth in the shortest-path tree, so every non-root
    node has a strictly higher-ranked neighbor.
    """
    adj = _square(adjacency, "adjacency").astype(bool)
    if root is None:
        root = select_root(distances)
    if connected_components(csr_matrix(adj), directed=False)[0] > 1:
        raise SkeletonError("graph is disconnected; call ensure_connected first")
    graph = csgraph_from_dense(edge_weights(affinity, adj), null_value=np.inf)
    weighted = dijkstra(graph, directed=True)

    # distances toward the root: search the reversed graph from the root
    to_root, successor = dijkstra(
        graph.T.tocsr(), directed=True, indices=root, return_predecessors=True
    )
    count = adj.shape[0]
    depth = np.zeros(count, dtype=np.int64)
    for node in range(count):
        cursor, steps = node, 0
        while cursor != root:
            cursor = int(successor[cursor])
            steps += 1
        depth[node] = steps

    groups = _dense_groups(to_root, RANK_TOLERANCE)
    keys = sorted({(int(groups[n]), int(depth[n])) for n in range(count) if n != root})
    rank_of = {key: index + 2 for index, key in enumerate(keys)}
    rank = np.array(
        [1 if n == root else rank_of[(int(groups[n]), int(depth[n]))] for n in range(count)],
        dtype=np.int64,
    )
    return weighted, rank


def _reaches(parents: np.ndarray, start: int, target: int) -> bool:
    cursor = start
    for _ in range(parents.shape[0]):
        if cursor == target:
            return True
        if parents[cursor] == cursor:
            return False
        cursor = int(parents[cursor])
    return cursor == target


def assign_parents(
    rank: np.ndarray, adjacency: np.ndarray, affinity: np.ndarray, root: int
) -> np.ndarray:
    """Parent of every node from its rank and neighbors.

    A node normally takes the higher-ranked neighbor with the smallest rank
    gap. A same-rank neighbor ``j`` becomes the parent instead when the
    highest-ranked shared higher neighbor ``l`` prefers ``j``
    (``a_lj > a_li``); candidates are tried in index order and one that would
    close a cycle is skipped.
    """
    adj = _square(adjacency, "adjacency").astype(bool)
    a = np.asarray(affinity, dtype=np.float64)
    ranks = np.asarray(rank, dtype=np.int64)
    count = ranks.shape[0]
    neighbors = [np.flatnonzero(adj[i] & (np.arange(count) != i)) for i in range(count)]
    higher = [{int(j) for j in neighbors[i] if ranks[j] < ranks[i]} for i in range(count)]

    parents = np.empty(count, dtype=np.int64)
    for i in range(count):
        if i == root:
            parents[i] = root
            continue
        if not higher[i]:
            raise SkeletonError(f"rank inversion at node {i}")
        parents[i] = min(sorted(higher[i]), key=lambda j: abs(ranks[j] - ranks[i]))

    for i in range(count):
        if i == root:
            continue
        same = [int(j) for j in neighbors[i] if ranks[j] == ranks[i]]
        for j in same:
            shared = sorted(higher[i] & higher[j])
            if not shared:
                continue
            anchor = max(shared, key=lambda k: abs(ranks[k] - ranks[i]))
            if a[anchor, j] > a[anchor, i]:
                if _reaches(parents, j, i):
                    logger.debug("skipping same-rank parent %d for %d: cycle", j, i)
                    continue
                parents[i] = j
                break
    return parents
