from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from skeleton_discovery.cli.main import main
from skeleton_discovery.serialization import dump_artifact
from skeleton_discovery.synthgen import load_ground_truth
from skeleton_discovery.types import KeypointTracks


def test_missing_config_file_is_a_config_error(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    code = main(["keypoints", "--config", str(tmp_path / "absent.json"), "--quiet"])
    assert code == 2
    assert "Config error" in capsys.readouterr().err


def test_invalid_config_value_is_a_config_error(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"keypoints": {"count": 0}}))
    assert main(["keypoints", "--config", str(config)]) == 2
    assert "keypoints.count" in capsys.readouterr().err


def test_missing_input_dir_is_an_input_error(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    missing = tmp_path / "nowhere"
    code = main(
        ["voxelize", "--input-dir", str(missing), "--output-dir", str(tmp_path / "out"), "-q"]
    )
    assert code == 3
    err = capsys.readouterr().err
    assert "voxelize:" in err
    assert str(missing) in err


def test_numerical_failure_exits_with_stage_prefix(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    tracks = KeypointTracks(mu=np.zeros((4, 1, 3)), alpha=np.ones((4, 1)))
    dump_artifact(tracks, tmp_path / "keypoints.json")
    code = main(["affinity", "--output-dir", str(tmp_path), "--neighbors", "1", "-q"])
    assert code == 4
    assert "affinity: affinity needs K >= 2 keypoints" in capsys.readouterr().err


def test_synth_writes_a_rig_bundle(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "rig"
    code = main(
        [
            "synth",
            "--kind",
            "star",
            "--bones",
            "3",
            "--frames",
            "4",
            "--points-per-bone",
            "20",
            "--output-dir",
            str(out),
        ]
    )
    assert code == 0
    assert sorted(p.name for p in out.glob("frame_*.ply")) == [
        f"frame_{t:04d}.ply" for t in range(4)
    ]
    truth = load_ground_truth(out)
    assert truth.joints.shape[:2] == (4, 4)
    assert "star rig" in capsys.readouterr().out


def test_subcommand_is_required() -> None:
    with pytest.raises(SystemExit):
        main([])
