"""Tests for canonical artifact encoding."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from skeleton_discovery.errors import ArtifactError
from skeleton_discovery.serialization import (
    dump_artifact,
    dumps_canonical,
    load_artifact,
    roundtrip_io,
)
from skeleton_discovery.synthgen import SyntheticRig
from skeleton_discovery.types import (
    AffinitySet,
    KeypointTracks,
    MetricReport,
    SkeletonTree,
    SkinWeights,
)


def test_dumps_canonical_sorts_keys_and_formats_floats() -> None:
    text = dumps_canonical({"b": 0.1, "a": [1, -0.0, True, None], "c": np.float32(0.5)})
    assert text == '{"a":[1,0,true,null],"b":0.10000000000000001,"c":0.5}\n'


def test_non_finite_values_are_rejected() -> None:
    with pytest.raises(ArtifactError, match="non-finite"):
        dumps_canonical({"value": float("nan")})


def test_skeleton_file_roundtrips_byte_identically(
    tmp_path: Path, branching_skeleton: SkeletonTree
) -> None:
    path = dump_artifact(branching_skeleton, tmp_path / "skeleton.json", config_hash="abc", seed=7)
    assert roundtrip_io(path) == path.read_text(encoding="utf-8")
    loaded, provenance = load_artifact(path)
    assert provenance == {"config_hash": "abc", "seed": 7}
    np.testing.assert_array_equal(loaded.parents, branching_skeleton.parents)
    np.testing.assert_array_equal(loaded.offsets, branching_skeleton.offsets)


def test_motion_file_roundtrips_byte_identically(
    tmp_path: Path, small_chain_rig: SyntheticRig
) -> None:
    path = dump_artifact(small_chain_rig.motion, tmp_path / "motion.json")
    assert roundtrip_io(path) == path.read_text(encoding="utf-8")
    loaded, provenance = load_artifact(path)
    assert provenance == {"config_hash": None, "seed": None}
    np.testing.assert_array_equal(loaded.rotations_6d, small_chain_rig.motion.rotations_6d)
    np.testing.assert_array_equal(
        loaded.root_translations, small_chain_rig.motion.root_translations
    )


def test_keypoints_and_affinity_roundtrip(tmp_path: Path, rng: np.random.Generator) -> None:
    tracks = KeypointTracks(mu=rng.normal(size=(4, 3, 3)), alpha=rng.uniform(size=(4, 3)))
    matrices = rng.uniform(size=(2, 3, 3))
    affinity = AffinitySet(matrices=matrices, combined=matrices.max(axis=0))
    for name, artifact in (("keypoints.json", tracks), ("affinity.json", affinity)):
        path = dump_artifact(artifact, tmp_path / name)
        assert roundtrip_io(path) == path.read_text(encoding="utf-8")
    loaded, _ = load_artifact(tmp_path / "keypoints.json")
    np.testing.assert_array_equal(loaded.mu, tracks.mu)
    np.testing.assert_array_equal(loaded.alpha, tracks.alpha)


def test_metric_skin_weights_and_rig_kinds(
    tmp_path: Path, small_star_rig: SyntheticRig
) -> None:
    report = MetricReport(metric="t_cd", value=0.5, per_frame=(0.25, 0.75), ci_half_width=None)
    weights = SkinWeights(np.array([[0.5, 0.5], [1.0, 0.0]]))
    truth = small_star_rig.ground_truth
    for name, artifact in (
        ("metrics.json", report),
        ("weights.json", weights),
        ("rig.json", truth),
    ):
        path = dump_artifact(artifact, tmp_path / name)
        assert roundtrip_io(path) == path.read_text(encoding="utf-8")
    loaded_truth, _ = load_artifact(tmp_path / "rig.json")
    np.testing.assert_array_equal(loaded_truth.joints, truth.joints)
    loaded_report, _ = load_artifact(tmp_path / "metrics.json")
    assert loaded_report.per_frame == (0.25, 0.75)


def _write(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_cycle_in_parents_is_rejected(tmp_path: Path) -> None:
    payload = {
        "kind": "skeleton",
        "K": 3,
        "root": 0,
        "parents": [0, 2, 1],
        "unit_offsets": [[0, 0, 0]] * 3,
        "offsets": [[0, 0, 0]] * 3,
        "intensities": [1, 1, 1],
    }
    with pytest.raises(ArtifactError, match="not a tree"):
        load_artifact(_write(tmp_path / "skeleton.json", payload))


def test_missing_field_is_named(tmp_path: Path) -> None:
    payload = {"kind": "keypoints", "K": 1, "T": 1}
    with pytest.raises(ArtifactError, match="'frames'"):
        load_artifact(_write(tmp_path / "keypoints.json", payload))


def test_wrong_shape_is_named(tmp_path: Path) -> None:
    payload = {"kind": "skin_weights", "N_p": 2, "K": 2, "weights": [[1.0, 0.0]]}
    with pytest.raises(ArtifactError, match="'weights'"):
        load_artifact(_write(tmp_path / "weights.json", payload))


def test_unknown_kind_and_bad_json(tmp_path: Path) -> None:
    with pytest.raises(ArtifactError, match="unknown artifact kind"):
        load_artifact(_write(tmp_path / "odd.json", {"kind": "mesh"}))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ArtifactError, match="invalid JSON"):
        load_artifact(broken)
    with pytest.raises(ArtifactError, match="not found"):
        load_artifact(tmp_path / "missing.json")


def test_unserializable_artifact(tmp_path: Path) -> None:
    with pytest.raises(ArtifactError, match="no serializer"):
        dump_artifact({"kind": "raw"}, tmp_path / "raw.json")
