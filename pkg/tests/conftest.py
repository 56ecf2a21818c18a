"""Shared pytest fixtures and configuration."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from skeleton_discovery import settings
from skeleton_discovery.synthgen import SyntheticRig, make_chain_rig, make_star_rig
from skeleton_discovery.types import SkeletonTree


def _central_difference(
    func: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    point = np.asarray(x, dtype=np.float64)
    flat = point.reshape(-1)
    gradient = np.zeros_like(flat)
    for index in range(flat.size):
        plus = flat.copy()
        minus = flat.copy()
        plus[index] += step
        minus[index] -= step
        gradient[index] = (
            func(plus.reshape(point.shape)) - func(minus.reshape(point.shape))
        ) / (2.0 * step)
    return gradient.reshape(point.shape)


@pytest.fixture
def finite_difference() -> Callable[..., np.ndarray]:
    return _central_difference


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240517)


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    """Keep every test away from the developer's environment and ``.env``."""
    blank = tmp_path / "blank.env"
    blank.write_text("")
    monkeypatch.setenv("NM_DOTENV_PATH", str(blank))
    monkeypatch.setenv("NM_THREADS", "1")
    monkeypatch.setenv("NM_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("NM_LOG_LEVEL", raising=False)
    monkeypatch.setattr(settings, "_CACHED_SETTINGS", None)


def make_tree(parents: list[int], offsets: np.ndarray | None = None) -> SkeletonTree:
    """Tree rooted at node 0 with unit +x offsets unless ``offsets`` is given."""
    count = len(parents)
    if offsets is None:
        offsets = np.zeros((count, 3))
        offsets[1:, 0] = 1.0
    offsets = np.asarray(offsets, dtype=np.float64)
    lengths = np.linalg.norm(offsets, axis=1, keepdims=True)
    unit = np.divide(offsets, lengths, out=np.zeros_like(offsets), where=lengths > 0.0)
    return SkeletonTree(
        root=0,
        parents=np.asarray(parents),
        unit_offsets=unit,
        offsets=offsets,
        intensities=np.ones(count),
    )


@pytest.fixture
def tree_factory() -> Callable[..., SkeletonTree]:
    return make_tree


@pytest.fixture
def chain_skeleton() -> SkeletonTree:
    return make_tree([0, 0, 1, 2])


@pytest.fixture
def branching_skeleton(rng: np.random.Generator) -> SkeletonTree:
    parents = [0, 0, 1, 1, 0, 4]
    offsets = rng.normal(size=(len(parents), 3))
    offsets[0] = 0.0
    return make_tree(parents, offsets)


@pytest.fixture
def small_chain_rig() -> SyntheticRig:
    return make_chain_rig(segments=2, frames=6, points_per_bone=60, seed=3)


@pytest.fixture
def small_star_rig() -> SyntheticRig:
    return make_star_rig(arms=3, frames=6, points_per_bone=60, seed=5)
