from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from skeleton_discovery.cli.inputs import (
    load_keypoints,
    load_motion,
    load_skeleton,
    require_path,
)
from skeleton_discovery.errors import ArtifactError, ConfigError
from skeleton_discovery.serialization import dump_artifact
from skeleton_discovery.types import KeypointTracks


@pytest.fixture
def keypoint_file(tmp_path: Path) -> Path:
    tracks = KeypointTracks(mu=np.zeros((3, 2, 3)), alpha=np.full((3, 2), 0.5))
    return dump_artifact(tracks, tmp_path / "keypoints.json", config_hash="abc", seed=1)


def test_require_path() -> None:
    assert require_path("some/dir", "input_dir") == Path("some/dir")
    with pytest.raises(ConfigError, match="input_dir is required"):
        require_path(None, "input_dir")


def test_load_keypoints(keypoint_file: Path) -> None:
    tracks = load_keypoints(keypoint_file)
    assert tracks.T == 3
    np.testing.assert_array_equal(tracks.alpha, np.full((3, 2), 0.5))


def test_wrong_kind_names_the_expected_artifact(keypoint_file: Path) -> None:
    with pytest.raises(ArtifactError, match="expected a motion artifact"):
        load_motion(keypoint_file)
    with pytest.raises(ArtifactError, match="expected a skeleton artifact"):
        load_skeleton(keypoint_file)


def test_skeleton_from_skeleton_artifact(tmp_path: Path, chain_skeleton) -> None:
    path = dump_artifact(chain_skeleton, tmp_path / "skeleton.json")
    loaded = load_skeleton(path)
    np.testing.assert_array_equal(loaded.parents, chain_skeleton.parents)
    assert loaded.root == chain_skeleton.root


def test_skeleton_embedded_in_motion(tmp_path: Path, small_star_rig) -> None:
    motion = small_star_rig.ground_truth.motion
    path = dump_artifact(motion, tmp_path / "motion.json")
    assert load_motion(path).T == motion.T
    np.testing.assert_array_equal(load_skeleton(path).parents, motion.skeleton.parents)
