from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from skeleton_discovery import settings
from skeleton_discovery.cli import orchestrator
from skeleton_discovery.cli.inputs import load_keypoints, load_motion, load_skeleton, load_voxels
from skeleton_discovery.cli.main import main
from skeleton_discovery.cli.outputs import MANIFEST_NAME
from skeleton_discovery.config import config_from_dict
from skeleton_discovery.errors import InputError, StageError
from skeleton_discovery.kinematics.fk import motion_joints
from skeleton_discovery.skeleton.extract import rebase_offsets
from skeleton_discovery.synthgen import write_rig_bundle

pytestmark = pytest.mark.slow

_SMALL = {
    "voxel": {"resolution": [10, 10, 10]},
    "keypoints": {"count": 3, "descent": {"max_iterations": 15}},
    "affinity": {"neighbors": 1, "descent": {"max_iterations": 15}},
    "fit": {"max_iterations": 15},
    "seed": 7,
}


@pytest.fixture
def rig_dir(tmp_path: Path, small_chain_rig) -> Path:
    return write_rig_bundle(small_chain_rig, tmp_path / "rig")


def _config(rig_dir: Path, output_dir: Path):
    return config_from_dict(
        {
            **_SMALL,
            "input_dir": str(rig_dir),
            "output_dir": str(output_dir),
            "ground_truth": str(rig_dir),
        }
    )


def test_run_pipeline_writes_every_artifact(rig_dir: Path, tmp_path: Path) -> None:
    out = tmp_path / "run"
    written = orchestrator.run_pipeline(_config(rig_dir, out), progress=False)
    for name in ("voxels", "keypoints", "affinity", "skeleton", "motion", "manifest"):
        assert written[name].is_file()
    assert (out / "metrics_sc_score.json").is_file()
    manifest = json.loads((out / MANIFEST_NAME).read_text())
    assert "skeleton.json" in manifest["files"]
    assert manifest["seed"] == 7


def test_runs_are_byte_identical(rig_dir: Path, tmp_path: Path) -> None:
    first = orchestrator.run_pipeline(_config(rig_dir, tmp_path / "a"), progress=False)
    second = orchestrator.run_pipeline(_config(rig_dir, tmp_path / "b"), progress=False)
    assert first.keys() == second.keys()
    for name, path in first.items():
        assert path.read_bytes() == second[name].read_bytes(), name


def test_voxel_cache_is_reused(rig_dir: Path, tmp_path: Path) -> None:
    cache_dir = tmp_path / "cache"
    config = _config(rig_dir, tmp_path / "out")
    orchestrator.run_pipeline(config, cache_dir=cache_dir, progress=False)
    assert any(cache_dir.rglob("*"))
    cached = orchestrator.run_pipeline(config, cache_dir=cache_dir, progress=False)
    assert cached["voxels"].is_file()


def test_stage_wraps_package_errors() -> None:
    with pytest.raises(StageError, match="^voxelize: boom$") as excinfo:
        with orchestrator.stage("voxelize"):
            raise InputError("boom")
    assert excinfo.value.exit_code == 3
    assert excinfo.value.stage == "voxelize"


def test_stepwise_cli_matches_run(rig_dir: Path, tmp_path: Path) -> None:
    config = tmp_path / "config.json"
    config.write_text(json.dumps({**_SMALL, "input_dir": str(rig_dir)}))
    steps = tmp_path / "steps"
    for command in ("voxelize", "keypoints", "affinity", "skeleton", "fit"):
        assert main([command, "--config", str(config), "--output-dir", str(steps), "-q"]) == 0
    full = tmp_path / "full"
    assert main(["run", "--config", str(config), "--output-dir", str(full), "-q"]) == 0
    for name in ("keypoints.json", "skeleton.json", "motion.json"):
        assert (steps / name).read_bytes() == (full / name).read_bytes(), name


def test_tracks_stay_normalized_and_motion_is_fitted_in_world_units(
    rig_dir: Path, tmp_path: Path
) -> None:
    out = tmp_path / "run"
    config = _config(rig_dir, out)
    written = orchestrator.run_pipeline(config, progress=False)
    tracks = load_keypoints(written["keypoints"])
    bbox = load_voxels(written["voxels"]).bbox
    assert tracks.mu.min() > -0.5
    assert tracks.mu.max() < 1.5

    motion = load_motion(written["motion"])
    world = orchestrator.world_tracks(tracks, bbox)
    expected = rebase_offsets(
        load_skeleton(written["skeleton"]), world.mu[0], config.skeleton_config()
    )
    np.testing.assert_allclose(motion.skeleton.offsets, expected.offsets, atol=1e-12)

    joints = motion_joints(motion)
    assert np.all(joints > bbox.minimum - bbox.extent)
    assert np.all(joints < bbox.maximum + bbox.extent)


def test_worker_count_does_not_change_results(
    rig_dir: Path, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    config = tmp_path / "config.json"
    config.write_text(json.dumps({**_SMALL, "input_dir": str(rig_dir)}))
    outputs = {}
    for threads in ("1", "8"):
        monkeypatch.setenv("NM_THREADS", threads)
        monkeypatch.setattr(settings, "_CACHED_SETTINGS", None)
        out = tmp_path / f"threads_{threads}"
        command = ["run", "--config", str(config), "--output-dir", str(out), "-q", "--no-cache"]
        assert main(command) == 0
        outputs[threads] = out

    serial, pooled = outputs["1"], outputs["8"]
    np.testing.assert_allclose(
        load_keypoints(pooled / "keypoints.json").mu,
        load_keypoints(serial / "keypoints.json").mu,
        atol=1e-9,
    )
    np.testing.assert_allclose(
        load_motion(pooled / "motion.json").rotations,
        load_motion(serial / "motion.json").rotations,
        atol=1e-9,
    )
    for name in ("metrics_tracking_chamfer.json", "metrics_motion_chamfer.json"):
        first = json.loads((serial / name).read_text())["value"]
        second = json.loads((pooled / name).read_text())["value"]
        assert second == pytest.approx(first, abs=1e-9)
