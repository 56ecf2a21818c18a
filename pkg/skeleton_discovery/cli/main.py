from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from skeleton_discovery.config import PipelineConfig, apply_overrides, load_config
from skeleton_discovery.errors import SkeletonDiscoveryError
from skeleton_discovery.kinematics.fk import motion_joints
from skeleton_discovery.kinematics.interpolate import interpolate_motion
from skeleton_discovery.retarget import RetargetPair, retarget_sequence
from skeleton_discovery.settings import get_settings
from skeleton_discovery.skeleton.extract import OFFSET_MODES
from skeleton_discovery.skinning import (
    skin_sequence,
    skin_weights,
    write_skin_weights_binary,
)
from skeleton_discovery.synthgen import (
    load_ground_truth,
    make_chain_rig,
    make_star_rig,
    write_rig_bundle,
)
from skeleton_discovery.voxelize.io import read_point_frames

from . import orchestrator
from .inputs import (
    load_affinity,
    load_keypoints,
    load_motion,
    load_skeleton,
    load_vertices,
    load_voxels,
)
from .outputs import (
    AFFINITY_NAME,
    KEYPOINTS_NAME,
    MOTION_NAME,
    SKELETON_NAME,
    VOXELS_NAME,
    write_artifact,
    write_metrics,
    write_point_sequence,
    write_voxels,
)

DESCRIPTION = """
Discover a skeleton from a point-cloud sequence, fit its motion, and
interpolate, retarget, skin and evaluate the result.
"""

EXAMPLES = """Examples:
  # Generate a synthetic chain rig and run the whole pipeline on it
  skeleton-discovery synth --kind chain --output-dir ./rig
  skeleton-discovery run --input-dir ./rig --output-dir ./results \\
      --ground-truth ./rig/ground_truth.json

  # Run one stage at a time in the same output directory
  skeleton-discovery voxelize --input-dir ./rig --output-dir ./results --grid 32
  skeleton-discovery keypoints --output-dir ./results --keypoints 6
"""

_ERROR_KINDS = {2: "Config", 3: "Input", 4: "Numerical"}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON pipeline config")
    parser.add_argument("--seed", type=int, help="Override the config seed")
    parser.add_argument(
        "--output-dir",
        type=Path,
        help="Directory holding stage artifacts (default: config output_dir)",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Log progress")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only log errors")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skeleton-discovery",
        description=DESCRIPTION,
        epilog=EXAMPLES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    voxelize = commands.add_parser("voxelize", help="Voxelize a PLY/OBJ frame directory")
    _common(voxelize)
    voxelize.add_argument("--input-dir", type=Path, help="Directory of frame files")
    voxelize.add_argument("--grid", type=int, help="Cubic grid resolution")

    keypoints = commands.add_parser("keypoints", help="Optimize keypoint tracks")
    _common(keypoints)
    keypoints.add_argument("--keypoints", type=int, help="Number of keypoints K")

    affinity = commands.add_parser("affinity", help="Regress affinity matrices")
    _common(affinity)
    affinity.add_argument("--neighbors", type=int, help="Number of neighbors N")

    skeleton = commands.add_parser("skeleton", help="Extract the skeleton tree")
    _common(skeleton)
    skeleton.add_argument("--neighbors", type=int, help="Number of neighbors N")
    skeleton.add_argument("--offset-mode", choices=OFFSET_MODES, help="Offset initialization")

    fit = commands.add_parser("fit", help="Fit per-frame joint rotations")
    _common(fit)

    interpolate = commands.add_parser("interpolate", help="In-between two motion frames")
    _common(interpolate)
    interpolate.add_argument("--motion", type=Path, help="Motion artifact (default: output dir)")
    interpolate.add_argument("--start", type=int, required=True)
    interpolate.add_argument("--end", type=int, required=True)
    interpolate.add_argument("--steps", type=int, help="In-between frame count")
    interpolate.add_argument("--method", choices=("slerp", "lerp"), default="slerp")

    retarget = commands.add_parser("retarget", help="Replay a motion on another skeleton")
    _common(retarget)
    retarget.add_argument("--motion", type=Path, help="Source motion artifact")
    retarget.add_argument("--target", type=Path, required=True, help="Target skeleton artifact")

    skin = commands.add_parser("skin", help="Bind points to a motion and deform them")
    _common(skin)
    skin.add_argument("--motion", type=Path, help="Motion artifact (default: output dir)")
    skin.add_argument("--points", type=Path, required=True, help="Rest-frame PLY/OBJ file")

    evaluate = commands.add_parser("eval", help="Score the fitted motion against the input")
    _common(evaluate)
    evaluate.add_argument("--input-dir", type=Path, help="Directory of frame files")
    evaluate.add_argument("--ground-truth", type=Path, help="Ground-truth rig for SC-score")

    synth = commands.add_parser("synth", help="Write a synthetic rig bundle")
    _common(synth)
    synth.add_argument("--kind", choices=("chain", "star"), default="chain")
    synth.add_argument("--bones", type=int, default=3, help="Chain segments or star arms")
    synth.add_argument("--frames", type=int, default=20)
    synth.add_argument("--amplitude", type=float, default=0.5, help="Peak swing in radians")
    synth.add_argument("--points-per-bone", type=int, default=400)

    run = commands.add_parser("run", help="Run the whole pipeline")
    _common(run)
    run.add_argument("--input-dir", type=Path, help="Directory of frame files")
    run.add_argument("--grid", type=int, help="Cubic grid resolution")
    run.add_argument("--keypoints", type=int, help="Number of keypoints K")
    run.add_argument("--neighbors", type=int, help="Number of neighbors N")
    run.add_argument("--offset-mode", choices=OFFSET_MODES, help="Offset initialization")
    run.add_argument("--ground-truth", type=Path, help="Ground-truth rig for SC-score")
    run.add_argument("--no-cache", action="store_true", help="Disable the voxel cache")
    return parser


def configure_logging(args: argparse.Namespace, level: str) -> None:
    if args.verbose:
        level = "INFO"
    elif args.quiet:
        level = "ERROR"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    config = apply_overrides(
        load_config(args.config),
        seed=args.seed,
        grid=getattr(args, "grid", None),
        keypoints=getattr(args, "keypoints", None),
        neighbors=getattr(args, "neighbors", None),
        offset_mode=getattr(args, "offset_mode", None),
        input_dir=getattr(args, "input_dir", None),
        output_dir=args.output_dir,
    )
    ground_truth = getattr(args, "ground_truth", None)
    if ground_truth is not None:
        config = dataclasses.replace(config, ground_truth=str(ground_truth))
    return config


def execute(args: argparse.Namespace, config: PipelineConfig, workers: int) -> None:
    """Dispatch one subcommand; artifacts land in ``config.output_dir``."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    provenance = {"config_hash": config.config_hash(), "seed": config.seed}
    stage = orchestrator.stage

    if args.command == "run":
        settings = get_settings()
        written = orchestrator.run_pipeline(
            config,
            workers=workers,
            cache_dir=None if args.no_cache else settings.cache_dir,
            progress=not args.quiet,
        )
        if not args.quiet:
            print(f"Wrote {len(written)} artifact(s) to {out}")
        return

    if args.command == "voxelize":
        with stage("voxelize"):
            voxels, frames = orchestrator.voxelize_stage(config, workers=workers)
            write_voxels(out, voxels)
        if not args.quiet:
            print(f"Voxelized {len(frames)} frame(s) at {voxels.resolution}")
    elif args.command == "keypoints":
        with stage("keypoints"):
            tracks = orchestrator.keypoint_stage(load_voxels(out / VOXELS_NAME), config)
            write_artifact(out, KEYPOINTS_NAME, tracks, **provenance)
    elif args.command == "affinity":
        with stage("affinity"):
            affinity = orchestrator.affinity_stage(load_keypoints(out / KEYPOINTS_NAME), config)
            write_artifact(out, AFFINITY_NAME, affinity, **provenance)
    elif args.command == "skeleton":
        with stage("skeleton"):
            skeleton = orchestrator.skeleton_stage(
                load_affinity(out / AFFINITY_NAME), load_keypoints(out / KEYPOINTS_NAME), config
            )
            write_artifact(out, SKELETON_NAME, skeleton, **provenance)
    elif args.command == "fit":
        with stage("fit"):
            motion = orchestrator.fit_stage(
                load_skeleton(out / SKELETON_NAME),
                load_keypoints(out / KEYPOINTS_NAME),
                load_voxels(out / VOXELS_NAME).bbox,
                config,
                workers=workers,
                progress=not args.quiet,
            )
            write_artifact(out, MOTION_NAME, motion, **provenance)
    elif args.command == "interpolate":
        with stage("interpolate"):
            motion = load_motion(args.motion or out / MOTION_NAME)
            between = interpolate_motion(
                motion, args.start, args.end, steps=args.steps, method=args.method
            )
            write_artifact(out, f"interpolated_{args.method}.json", between, **provenance)
    elif args.command == "retarget":
        with stage("retarget"):
            motion = load_motion(args.motion or out / MOTION_NAME)
            pair = RetargetPair(
                source=motion.skeleton, motion=motion, target=load_skeleton(args.target)
            )
            write_artifact(out, "retargeted.json", retarget_sequence(pair), **provenance)
    elif args.command == "skin":
        with stage("skin"):
            motion = load_motion(args.motion or out / MOTION_NAME)
            vertices = load_vertices(args.points)
            rest = motion_joints(motion)[0]
            weights = skin_weights(
                vertices,
                np.concatenate([rest, motion.intensities[0][:, None]], axis=1),
                motion.skeleton.parents,
                motion.skeleton.root,
                config.skinning.epsilon,
                config.skinning.kernel_sigma,
            )
            write_artifact(out, "skin_weights.json", weights, **provenance)
            write_skin_weights_binary(weights, out / "skin_weights.nmsw")
            deformed = skin_sequence(vertices, weights, motion.skeleton, motion)
            write_point_sequence(out / "skinned", list(deformed))
    elif args.command == "eval":
        with stage("eval"):
            voxels = load_voxels(out / VOXELS_NAME)
            frames = read_point_frames(orchestrator.input_directory(config))
            truth = load_ground_truth(config.ground_truth) if config.ground_truth else None
            reports = orchestrator.eval_stage(
                voxels,
                frames,
                load_motion(out / MOTION_NAME),
                load_keypoints(out / KEYPOINTS_NAME),
                config,
                ground_truth=truth,
                workers=workers,
            )
            write_metrics(out, reports, **provenance)
        if not args.quiet:
            for report in reports:
                print(f"{report.metric}: {report.value:.6g}")
    elif args.command == "synth":
        with stage("synth"):
            build = make_chain_rig if args.kind == "chain" else make_star_rig
            rig = build(
                args.bones,
                frames=args.frames,
                motion_amplitude=args.amplitude,
                points_per_bone=args.points_per_bone,
                seed=config.seed,
            )
            write_rig_bundle(rig, out, **provenance)
        if not args.quiet:
            print(f"Wrote {rig.T} frame(s) of a {args.kind} rig to {out}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = create_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings()
        configure_logging(args, settings.log_level)
        config = resolve_config(args)
        execute(args, config, settings.threads)
    except SkeletonDiscoveryError as exc:
        kind = _ERROR_KINDS.get(exc.exit_code, "Numerical")
        print(f"{kind} error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 130
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
