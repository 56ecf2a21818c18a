from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from tqdm import tqdm

from skeleton_discovery.affinity.optimize import optimize_affinity
from skeleton_discovery.cache import FileCache, voxel_cache_key
from skeleton_discovery.config import PipelineConfig
from skeleton_discovery.errors import ConfigError, SkeletonDiscoveryError, StageError
from skeleton_discovery.keypoints.optimize import optimize_keypoints
from skeleton_discovery.kinematics.fit import fit_motion
from skeleton_discovery.kinematics.fk import motion_joints
from skeleton_discovery.metrics import motion_chamfer_report, sc_report, tracking_chamfer_report
from skeleton_discovery.skeleton.extract import extract_skeleton, rebase_offsets
from skeleton_discovery.skinning import skin_sequence, skin_weights
from skeleton_discovery.synthgen import load_ground_truth
from skeleton_discovery.types import (
    AffinitySet,
    BBox,
    GroundTruth,
    KeypointTracks,
    MetricReport,
    MotionSequence,
    PointFrame,
    SkeletonTree,
    VoxelSequence,
)
from skeleton_discovery.voxelize.grid import compute_shared_bbox, voxelize_sequence
from skeleton_discovery.voxelize.io import list_point_files, read_point_frames

from .outputs import (
    AFFINITY_NAME,
    KEYPOINTS_NAME,
    MOTION_NAME,
    SKELETON_NAME,
    write_artifact,
    write_manifest,
    write_metrics,
    write_voxels,
)

logger = logging.getLogger(__name__)

STAGES = ("voxelize", "keypoints", "affinity", "skeleton", "fit", "eval")


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Re-raise package errors as :class:`StageError` tagged with ``name``."""
    try:
        yield
    except StageError:
        raise
    except SkeletonDiscoveryError as exc:
        raise StageError(name, exc) from exc


def input_directory(config: PipelineConfig) -> Path:
    if config.input_dir is None:
        raise ConfigError("input_dir is required")
    return Path(config.input_dir)


def voxelize_stage(
    config: PipelineConfig,
    *,
    cache: FileCache | None = None,
    workers: int = 1,
) -> tuple[VoxelSequence, list[PointFrame]]:
    """Read the frames of ``config.input_dir`` and voxelize them in a shared box."""
    root = input_directory(config)
    files = list_point_files(root)
    frames = read_point_frames(root)
    key = voxel_cache_key(files, config.voxel.resolution, config.voxel.padding)
    if cache is not None:
        cached = cache.get_voxels(key)
        if cached is not None:
            logger.info("voxel cache hit for %s", root)
            return cached, frames
    bbox = compute_shared_bbox(frames, config.voxel.padding)
    voxels = voxelize_sequence(frames, bbox, config.voxel.resolution, workers=workers)
    if cache is not None:
        cache.set_voxels(key, voxels)
    return voxels, frames


def keypoint_stage(voxels: VoxelSequence, config: PipelineConfig) -> KeypointTracks:
    """Keypoint tracks in the normalized coordinates of the shared bounding box."""
    return optimize_keypoints(voxels, config.keypoint_config())


def world_tracks(tracks: KeypointTracks, bbox: BBox) -> KeypointTracks:
    return KeypointTracks(mu=bbox.denormalize(tracks.mu), alpha=tracks.alpha)


def affinity_stage(tracks: KeypointTracks, config: PipelineConfig) -> AffinitySet:
    return optimize_affinity(tracks, config.affinity_config())


def skeleton_stage(
    affinity: AffinitySet, tracks: KeypointTracks, config: PipelineConfig
) -> SkeletonTree:
    return extract_skeleton(affinity.combined, tracks, config.skeleton_config())


def fit_stage(
    skeleton: SkeletonTree,
    tracks: KeypointTracks,
    bbox: BBox,
    config: PipelineConfig,
    *,
    workers: int = 1,
    progress: bool = False,
) -> MotionSequence:
    """Fit the motion in world units.

    ``skeleton`` and ``tracks`` are in normalized coordinates; both are
    carried into ``bbox`` first.
    """
    world = world_tracks(tracks, bbox)
    rebased = rebase_offsets(skeleton, world.mu[0], config.skeleton_config())
    motion, fits = fit_motion(
        rebased, world, settings=config.fit, workers=workers, progress=progress
    )
    stalled = sum(not fit.converged for fit in fits)
    if stalled:
        logger.info("%d of %d frame fits hit the iteration budget", stalled, len(fits))
    return motion


def reconstruct_voxels(
    rest_points: np.ndarray,
    motion: MotionSequence,
    voxels: VoxelSequence,
    config: PipelineConfig,
    *,
    workers: int = 1,
) -> VoxelSequence:
    """Skin ``rest_points`` (frame 0) through ``motion`` and voxelize in the observed box."""
    rest_joints = motion_joints(motion)[0]
    keypoints = np.concatenate([rest_joints, motion.intensities[0][:, None]], axis=1)
    weights = skin_weights(
        rest_points,
        keypoints,
        motion.skeleton.parents,
        motion.skeleton.root,
        config.skinning.epsilon,
        config.skinning.kernel_sigma,
    )
    deformed = skin_sequence(rest_points, weights, motion.skeleton, motion)
    return voxelize_sequence(
        [PointFrame(points) for points in deformed],
        voxels.bbox,
        voxels.resolution,
        clip=True,
        workers=workers,
    )


def eval_stage(
    voxels: VoxelSequence,
    frames: list[PointFrame],
    motion: MotionSequence,
    tracks: KeypointTracks,
    config: PipelineConfig,
    *,
    ground_truth: GroundTruth | None = None,
    workers: int = 1,
) -> list[MetricReport]:
    """Tracking and motion Chamfer of the skinned reconstruction, and SC when joints are known.

    ``tracks`` are normalized; SC is scored in world units.
    """
    predicted = reconstruct_voxels(frames[0].points, motion, voxels, config, workers=workers)
    reports = [
        tracking_chamfer_report(voxels, predicted),
        motion_chamfer_report(voxels, predicted, workers=workers),
    ]
    if ground_truth is not None:
        reports.append(sc_report(world_tracks(tracks, voxels.bbox), ground_truth.joints))
    return reports


def run_pipeline(
    config: PipelineConfig,
    *,
    workers: int = 1,
    cache_dir: Path | None = None,
    progress: bool = True,
) -> dict[str, Path]:
    """Run every stage and write its artifact into ``config.output_dir``.

    Returns the written files keyed by artifact name.
    """
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    cache = FileCache(cache_dir) if cache_dir is not None else None
    config_hash = config.config_hash()
    seed = config.seed
    written: dict[str, Path] = {}

    bar = tqdm(total=len(STAGES), desc="Pipeline", unit="stage", disable=not progress)
    try:
        with stage("voxelize"):
            voxels, frames = voxelize_stage(config, cache=cache, workers=workers)
            written["voxels"] = write_voxels(output_dir, voxels)
        bar.update()

        with stage("keypoints"):
            tracks = keypoint_stage(voxels, config)
            written["keypoints"] = write_artifact(
                output_dir, KEYPOINTS_NAME, tracks, config_hash=config_hash, seed=seed
            )
        bar.update()

        with stage("affinity"):
            affinity = affinity_stage(tracks, config)
            written["affinity"] = write_artifact(
                output_dir, AFFINITY_NAME, affinity, config_hash=config_hash, seed=seed
            )
        bar.update()

        with stage("skeleton"):
            skeleton = skeleton_stage(affinity, tracks, config)
            written["skeleton"] = write_artifact(
                output_dir, SKELETON_NAME, skeleton, config_hash=config_hash, seed=seed
            )
        bar.update()

        with stage("fit"):
            motion = fit_stage(
                skeleton, tracks, voxels.bbox, config, workers=workers, progress=progress
            )
            written["motion"] = write_artifact(
                output_dir, MOTION_NAME, motion, config_hash=config_hash, seed=seed
            )
        bar.update()

        with stage("eval"):
            truth = None
            if config.ground_truth is not None:
                truth = load_ground_truth(config.ground_truth)
            reports = eval_stage(
                voxels, frames, motion, tracks, config, ground_truth=truth, workers=workers
            )
            for path in write_metrics(output_dir, reports, config_hash=config_hash, seed=seed):
                written[path.name] = path
        bar.update()
    finally:
        bar.close()

    written["manifest"] = write_manifest(
        output_dir, written.values(), config_hash=config_hash, seed=seed
    )
    return written
