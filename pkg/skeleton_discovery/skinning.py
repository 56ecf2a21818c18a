"""Distance-based skin weights and linear blend skinning."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from skeleton_discovery.errors import ArtifactError, SkinningError
from skeleton_discovery.kinematics.fk import JointTransforms, joint_transforms
from skeleton_discovery.types import MotionSequence, SkeletonTree, SkinWeights

DEFAULT_EPSILON = 0.2
NMSW_MAGIC = b"NMSW"
_ROW_TOLERANCE = 1e-9

_NMSW_HEADER = np.dtype([("magic", "S4"), ("vertices", "<u4"), ("joints", "<u4")])


def _keypoint_frame(keypoints: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    frame = np.asarray(keypoints, dtype=np.float64)
    if frame.ndim != 2 or frame.shape[1] != 4:
        raise SkinningError(f"keypoints must be (K, 4) rows of [x, y, z, alpha], got {frame.shape}")
    return frame[:, :3], frame[:, 3]


def valid_ancestors(parents: np.ndarray, root: int, invalid: np.ndarray) -> np.ndarray:
    """Parent of every node after hopping over invalid ancestors.

    The hop stops at the root, so it terminates within K steps.
    """
    parents = np.asarray(parents, dtype=np.int64)
    effective = parents.copy()
    for node in range(parents.shape[0]):
        if node == root:
            continue
        ancestor = int(parents[node])
        for _ in range(parents.shape[0]):
            if ancestor == root or not invalid[ancestor]:
                break
            ancestor = int(parents[ancestor])
        effective[node] = ancestor
    return effective


def bone_positions(
    keypoints: np.ndarray,
    parents: np.ndarray,
    root: int,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bone midpoints, the invalid-node mask and the hop-adjusted parents.

    A node is invalid when its intensity is below ``epsilon``. The root's
    bone sits on the root itself.
    """
    mu, alpha = _keypoint_frame(keypoints)
    invalid = alpha < epsilon
    if np.all(invalid):
        raise SkinningError(f"every keypoint has intensity below {epsilon}")
    effective = valid_ancestors(parents, root, invalid)
    bones = 0.5 * (mu + mu[effective])
    bones[root] = mu[root]
    return bones, invalid, effective


def skin_weights(
    vertices: np.ndarray,
    keypoints: np.ndarray,
    parents: np.ndarray,
    root: int,
    epsilon: float = DEFAULT_EPSILON,
    kernel_sigma: float | None = None,
) -> SkinWeights:
    """Gaussian weights over the nearest valid bone's child and parent joints.

    ``kernel_sigma`` defaults to half the child's bone length. Vertices whose
    nearest bone is the root's, or whose parent joint is invalid, are bound to
    the child alone.
    """
    points = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    mu, _ = _keypoint_frame(keypoints)
    bones, invalid, effective = bone_positions(keypoints, parents, root, epsilon)
    count = mu.shape[0]

    distances = np.sum((points[:, None, :] - bones[None, :, :]) ** 2, axis=-1)
    distances[:, invalid] = np.inf
    child = np.argmin(distances, axis=1)
    parent = effective[child]

    if kernel_sigma is None:
        sigma = 0.5 * np.linalg.norm(mu[child] - mu[parent], axis=1)
    else:
        if kernel_sigma <= 0.0:
            raise SkinningError(f"kernel_sigma must be > 0, got {kernel_sigma}")
        sigma = np.full(points.shape[0], float(kernel_sigma))
    single = (child == root) | invalid[parent] | (sigma <= 0.0)

    safe_sigma = np.where(single, 1.0, sigma)
    logits = np.stack(
        [
            -np.sum((points - mu[child]) ** 2, axis=1),
            -np.sum((points - mu[parent]) ** 2, axis=1),
        ],
        axis=1,
    ) / (2.0 * safe_sigma[:, None] ** 2)
    pair = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
    pair[single] = (1.0, 0.0)

    matrix = np.zeros((points.shape[0], count))
    rows = np.arange(points.shape[0])
    matrix[rows, child] += pair[:, 0]
    matrix[rows, parent] += pair[:, 1]
    return SkinWeights(matrix)


def lbs_deform(
    vertices: np.ndarray,
    weights: SkinWeights,
    rest: JointTransforms,
    posed: JointTransforms,
) -> np.ndarray:
    """``p' = sum_k w_k (R_k (p - mu_k_rest) + mu_k_posed)`` with ``R_k = G_posed G_rest^T``."""
    points = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    matrix = weights.matrix
    if matrix.shape != (points.shape[0], rest.positions.shape[0]):
        raise SkinningError(
            f"weights are {matrix.shape}, expected ({points.shape[0]}, {rest.positions.shape[0]})"
        )
    row_sums = matrix.sum(axis=1)
    bad = np.flatnonzero(np.abs(row_sums - 1.0) > _ROW_TOLERANCE)
    if bad.size:
        raise SkinningError(
            f"weight row {int(bad[0])} sums to {row_sums[bad[0]]:.12g}, expected 1"
        )
    relative = np.einsum("kij,klj->kil", posed.rotations, rest.rotations)
    local = points[:, None, :] - rest.positions[None, :, :]
    moved = np.einsum("kij,nkj->nki", relative, local) + posed.positions[None, :, :]
    return np.einsum("nk,nki->ni", matrix, moved)


def skin_sequence(
    vertices: np.ndarray,
    weights: SkinWeights,
    skeleton: SkeletonTree,
    motion: MotionSequence,
    *,
    rest_frame: int = 0,
) -> np.ndarray:
    """Deform ``vertices`` (bound at ``rest_frame``) through every frame, (T, N_p, 3)."""
    rest = joint_transforms(skeleton, motion.pose(rest_frame))
    return np.stack(
        [
            lbs_deform(vertices, weights, rest, joint_transforms(skeleton, pose))
            for pose in motion.poses
        ]
    )


def write_skin_weights_binary(weights: SkinWeights, path: Path | str) -> Path:
    """Dense NMSW file: header then little-endian f32 rows."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    header = np.zeros((), dtype=_NMSW_HEADER)
    header["magic"] = NMSW_MAGIC
    header["vertices"] = weights.vertex_count
    header["joints"] = weights.K
    body = weights.matrix.astype("<f4").tobytes(order="C")
    target.write_bytes(header.tobytes() + body)
    return target


def read_skin_weights_binary(path: Path | str) -> SkinWeights:
    source = Path(path)
    if not source.is_file():
        raise ArtifactError(f"skin weight file not found: {source}")
    data = source.read_bytes()
    if len(data) < _NMSW_HEADER.itemsize:
        raise ArtifactError(f"{source}: truncated NMSW header")
    header = np.frombuffer(data, dtype=_NMSW_HEADER, count=1)[0]
    if bytes(header["magic"]) != NMSW_MAGIC:
        raise ArtifactError(f"{source}: field 'magic' is not NMSW")
    shape = (int(header["vertices"]), int(header["joints"]))
    body = np.frombuffer(data, dtype="<f4", offset=_NMSW_HEADER.itemsize)
    if body.size != shape[0] * shape[1]:
        raise ArtifactError(f"{source}: weight payload does not match header {shape}")
    matrix = body.reshape(shape).astype(np.float64)
    # f32 storage loses the unit row sums
    sums = matrix.sum(axis=1, keepdims=True)
    return SkinWeights(np.divide(matrix, sums, out=matrix.copy(), where=sums > 0.0))

