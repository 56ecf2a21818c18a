from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from skeleton_discovery.serialization import dump_artifact, dumps_canonical
from skeleton_discovery.types import MetricReport, VoxelSequence
from skeleton_discovery.voxelize.io import write_point_frame, write_voxel_sequence

VOXELS_NAME = "voxels.nmvx"
KEYPOINTS_NAME = "keypoints.json"
AFFINITY_NAME = "affinity.json"
SKELETON_NAME = "skeleton.json"
MOTION_NAME = "motion.json"
MANIFEST_NAME = "manifest.json"


def _metric_stem(metric: str) -> str:
    clean = re.sub(r"[^\w\-.]", "_", metric.lower()).strip("_")
    return f"metrics_{clean or 'report'}"


def write_voxels(output_dir: Path, voxels: VoxelSequence) -> Path:
    return write_voxel_sequence(voxels, output_dir / VOXELS_NAME)


def write_artifact(
    output_dir: Path,
    name: str,
    artifact: Any,
    *,
    config_hash: str,
    seed: int,
) -> Path:
    return dump_artifact(artifact, output_dir / name, config_hash=config_hash, seed=seed)


def write_metrics(
    output_dir: Path,
    reports: Iterable[MetricReport],
    *,
    config_hash: str,
    seed: int,
) -> list[Path]:
    """One JSON report per metric, plus a CSV of its per-frame breakdown."""
    written: list[Path] = []
    for report in reports:
        stem = _metric_stem(report.metric)
        written.append(
            dump_artifact(report, output_dir / f"{stem}.json", config_hash=config_hash, seed=seed)
        )
        if report.per_frame:
            target = output_dir / f"{stem}.csv"
            report.to_frame().to_csv(target, index=False)
            written.append(target)
    return written


def write_point_sequence(directory: Path, frames: Sequence[np.ndarray]) -> list[Path]:
    return [
        write_point_frame(points, directory / f"frame_{index:04d}.ply")
        for index, points in enumerate(frames)
    ]


def write_manifest(
    output_dir: Path,
    files: Iterable[Path],
    *,
    config_hash: str,
    seed: int,
) -> Path:
    """Canonical list of the files a run wrote, relative to ``output_dir``."""
    target = output_dir / MANIFEST_NAME
    entry = {
        "config_hash": config_hash,
        "seed": seed,
        "files": sorted(str(Path(path).relative_to(output_dir)) for path in files),
    }
    target.write_text(dumps_canonical(entry), encoding="utf-8")
    return target
