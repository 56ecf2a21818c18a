"""6D rotation representation.

A rotation is parameterized by two 3-vectors ``(a1, a2)``; Gram-Schmidt turns
them into the first two columns of the matrix and the cross product
supplies the third.
"""

from __future__ import annotations

import numpy as np

from skeleton_discovery.errors import KinematicsError

_DEGENERATE_NORM = 1e-9


def _split(sixd: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(sixd, dtype=np.float64)
    if values.shape[-1] != 6:
        raise KinematicsError(f"6D rotations need a trailing axis of 6, got {values.shape}")
    return values[..., :3], values[..., 3:]


def rot6d_to_matrix(sixd: np.ndarray) -> np.ndarray:
    """Map ``(..., 6)`` inputs to ``(..., 3, 3)`` rotation matrices."""
    a1, a2 = _split(sixd)
    norm1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(norm1 <= _DEGENERATE_NORM):
        raise KinematicsError("degenerate 6D rotation")
    c1 = a1 / norm1
    residual = a2 - np.sum(c1 * a2, axis=-1, keepdims=True) * c1
    norm2 = np.linalg.norm(residual, axis=-1, keepdims=True)
    if np.any(norm2 <= _DEGENERATE_NORM):
        raise KinematicsError("degenerate 6D rotation")
    c2 = residual / norm2
    c3 = np.cross(c1, c2)
    return np.stack([c1, c2, c3], axis=-1)


def matrix_to_rot6d(matrix: np.ndarray) -> np.ndarray:
    """Return the first two columns of ``(..., 3, 3)`` matrices as ``(..., 6)``."""
    values = np.asarray(matrix, dtype=np.float64)
    return np.concatenate([values[..., :, 0], values[..., :, 1]], axis=-1)


def rot6d_vjp(sixd: np.ndarray, grad_matrix: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. the rotation matrix back onto the 6D input.

    Works on a single ``(6,)`` input with a ``(3, 3)`` upstream gradient.
    """
    a1, a2 = _split(sixd)
    norm1 = float(np.linalg.norm(a1))
    c1 = a1 / norm1
    projection = float(c1 @ a2)
    residual = a2 - projection * c1
    norm2 = float(np.linalg.norm(residual))
    c2 = residual / norm2

    g1 = grad_matrix[:, 0] + np.cross(c2, grad_matrix[:, 2])
    g2 = grad_matrix[:, 1] + np.cross(grad_matrix[:, 2], c1)

    g_residual = (g2 - c2 * float(c2 @ g2)) / norm2
    g_a2 = g_residual - c1 * float(c1 @ g_residual)
    g1 = g1 - float(c1 @ g_residual) * a2 - projection * g_residual
    g_a1 = (g1 - c1 * float(c1 @ g1)) / norm1
    return np.concatenate([g_a1, g_a2])
