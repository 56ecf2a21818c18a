"""Canonical JSON encoding and typed artifact loading."""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from skeleton_discovery.errors import ArtifactError, SkeletonDiscoveryError
from skeleton_discovery.types import (
    AffinitySet,
    GroundTruth,
    KeypointTracks,
    MetricReport,
    MotionSequence,
    SkeletonTree,
    SkinWeights,
)

__all__ = [
    "affinity_to_dict",
    "dump_artifact",
    "dumps_canonical",
    "keypoints_to_dict",
    "load_artifact",
    "metric_to_dict",
    "motion_to_dict",
    "rig_to_dict",
    "roundtrip_io",
    "skeleton_to_dict",
    "skin_weights_to_dict",
]


def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ArtifactError(f"non-finite value {value!r} cannot be serialized")
    text = format(value, ".17g")
    return "0" if text == "-0" else text


def _encode(obj: Any, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), parts)
    elif isinstance(obj, Mapping):
        parts.append("{")
        for idx, key in enumerate(sorted(obj)):
            if idx:
                parts.append(",")
            parts.append(json.dumps(str(key)))
            parts.append(":")
            _encode(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, Sequence):
        parts.append("[")
        for idx, item in enumerate(obj):
            if idx:
                parts.append(",")
            _encode(item, parts)
        parts.append("]")
    else:
        raise ArtifactError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_canonical(obj: Any) -> str:
    """Serialize with sorted keys and 17-significant-digit floats."""
    parts: list[str] = []
    _encode(obj, parts)
    parts.append("\n")
    return "".join(parts)


def _provenance(config_hash: str | None, seed: int | None) -> dict[str, Any]:
    return {"config_hash": config_hash, "seed": seed}


def keypoints_to_dict(tracks: KeypointTracks) -> dict[str, Any]:
    return {
        "kind": "keypoints",
        "K": tracks.K,
        "T": tracks.T,
        "frames": [tracks.frame(t) for t in range(tracks.T)],
    }


def affinity_to_dict(affinity: AffinitySet) -> dict[str, Any]:
    return {
        "kind": "affinity",
        "N": affinity.N,
        "K": affinity.K,
        "A_n": affinity.matrices,
        "A": affinity.combined,
        "degenerate": affinity.degenerate,
    }


def skeleton_to_dict(skeleton: SkeletonTree) -> dict[str, Any]:
    return {
        "kind": "skeleton",
        "K": skeleton.K,
        "root": skeleton.root,
        "parents": skeleton.parents,
        "unit_offsets": skeleton.unit_offsets,
        "offsets": skeleton.offsets,
        "intensities": skeleton.intensities,
    }


def motion_to_dict(motion: MotionSequence) -> dict[str, Any]:
    return {
        "kind": "motion",
        "skeleton": skeleton_to_dict(motion.skeleton),
        "frames": [
            {
                "root_translation": motion.root_translations[t],
                "rotations_6d": motion.rotations_6d[t],
                "intensities": motion.intensities[t],
            }
            for t in range(motion.T)
        ],
    }


def metric_to_dict(report: MetricReport) -> dict[str, Any]:
    return {
        "kind": "metrics",
        "metric": report.metric,
        "value": report.value,
        "per_frame": list(report.per_frame),
        "ci_half_width": report.ci_half_width,
        "details": report.details,
    }


def skin_weights_to_dict(weights: SkinWeights) -> dict[str, Any]:
    return {
        "kind": "skin_weights",
        "N_p": weights.vertex_count,
        "K": weights.K,
        "weights": weights.matrix,
    }


def rig_to_dict(truth: GroundTruth) -> dict[str, Any]:
    return {
        "kind": "rig",
        "motion": motion_to_dict(truth.motion),
        "joints": truth.joints,
    }


def _require(payload: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in payload:
        raise ArtifactError(f"{context}: missing field {key!r}")
    return payload[key]


def _array(payload: Mapping[str, Any], key: str, context: str, **kwargs: Any) -> np.ndarray:
    raw = _require(payload, key, context)
    try:
        return np.asarray(raw, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ArtifactError(f"{context}: field {key!r} is not a numeric array") from exc


def _skeleton_from_dict(payload: Mapping[str, Any]) -> SkeletonTree:
    count = int(_require(payload, "K", "skeleton"))
    parents = _array(payload, "parents", "skeleton", dtype=np.int64)
    if parents.shape != (count,):
        raise ArtifactError(f"skeleton: field 'parents' must have length {count}")
    try:
        return SkeletonTree(
            root=int(_require(payload, "root", "skeleton")),
            parents=parents,
            unit_offsets=_array(payload, "unit_offsets", "skeleton", dtype=np.float64),
            offsets=_array(payload, "offsets", "skeleton", dtype=np.float64),
            intensities=_array(payload, "intensities", "skeleton", dtype=np.float64),
        )
    except ArtifactError:
        raise
    except (SkeletonDiscoveryError, ValueError) as exc:
        raise ArtifactError(f"skeleton: field 'parents' rejected: {exc}") from exc


def _keypoints_from_dict(payload: Mapping[str, Any]) -> KeypointTracks:
    frames = _array(payload, "frames", "keypoints", dtype=np.float64)
    count = int(_require(payload, "K", "keypoints"))
    length = int(_require(payload, "T", "keypoints"))
    if frames.shape != (length, count, 4):
        raise ArtifactError(f"keypoints: field 'frames' must be ({length}, {count}, 4)")
    return KeypointTracks(mu=frames[..., :3], alpha=frames[..., 3])


def _affinity_from_dict(payload: Mapping[str, Any]) -> AffinitySet:
    matrices = _array(payload, "A_n", "affinity", dtype=np.float64)
    combined = _array(payload, "A", "affinity", dtype=np.float64)
    count = int(_require(payload, "K", "affinity"))
    neighbors = int(_require(payload, "N", "affinity"))
    if matrices.shape != (neighbors, count, count):
        raise ArtifactError(f"affinity: field 'A_n' must be ({neighbors}, {count}, {count})")
    if combined.shape != (count, count):
        raise ArtifactError(f"affinity: field 'A' must be ({count}, {count})")
    return AffinitySet(
        matrices=matrices,
        combined=combined,
        degenerate=bool(payload.get("degenerate", False)),
    )


def _motion_from_dict(payload: Mapping[str, Any]) -> MotionSequence:
    skeleton = _skeleton_from_dict(_require(payload, "skeleton", "motion"))
    frames = _require(payload, "frames", "motion")
    translations, rotations, intensities = [], [], []
    for index, frame in enumerate(frames):
        context = f"motion.frames[{index}]"
        translations.append(_array(frame, "root_translation", context, dtype=np.float64))
        sixd = _array(frame, "rotations_6d", context, dtype=np.float64)
        if sixd.shape != (skeleton.K, 6):
            raise ArtifactError(f"{context}: field 'rotations_6d' must be ({skeleton.K}, 6)")
        rotations.append(sixd)
        intensities.append(_array(frame, "intensities", context, dtype=np.float64))
    return MotionSequence(
        skeleton=skeleton,
        root_translations=np.asarray(translations).reshape(-1, 3),
        rotations_6d=np.asarray(rotations).reshape(-1, skeleton.K, 6),
        intensities=np.asarray(intensities).reshape(-1, skeleton.K),
    )


def _metric_from_dict(payload: Mapping[str, Any]) -> MetricReport:
    return MetricReport(
        metric=str(_require(payload, "metric", "metrics")),
        value=float(_require(payload, "value", "metrics")),
        per_frame=tuple(float(v) for v in _require(payload, "per_frame", "metrics")),
        ci_half_width=payload.get("ci_half_width"),
        details=dict(payload.get("details", {})),
    )


def _skin_weights_from_dict(payload: Mapping[str, Any]) -> SkinWeights:
    matrix = _array(payload, "weights", "skin_weights", dtype=np.float64)
    shape = (
        int(_require(payload, "N_p", "skin_weights")),
        int(_require(payload, "K", "skin_weights")),
    )
    if matrix.shape != shape:
        raise ArtifactError(f"skin_weights: field 'weights' must be {shape}")
    try:
        return SkinWeights(matrix)
    except SkeletonDiscoveryError as exc:
        raise ArtifactError(f"skin_weights: field 'weights' rejected: {exc}") from exc


def _rig_from_dict(payload: Mapping[str, Any]) -> GroundTruth:
    motion = _motion_from_dict(_require(payload, "motion", "rig"))
    joints = _array(payload, "joints", "rig", dtype=np.float64)
    if joints.shape != (motion.T, motion.skeleton.K, 3):
        raise ArtifactError(f"rig: field 'joints' must be ({motion.T}, {motion.skeleton.K}, 3)")
    return GroundTruth(motion=motion, joints=joints)


_LOADERS = {
    "keypoints": _keypoints_from_dict,
    "affinity": _affinity_from_dict,
    "skeleton": _skeleton_from_dict,
    "motion": _motion_from_dict,
    "metrics": _metric_from_dict,
    "skin_weights": _skin_weights_from_dict,
    "rig": _rig_from_dict,
}

_DUMPERS = {
    KeypointTracks: keypoints_to_dict,
    AffinitySet: affinity_to_dict,
    SkeletonTree: skeleton_to_dict,
    MotionSequence: motion_to_dict,
    MetricReport: metric_to_dict,
    SkinWeights: skin_weights_to_dict,
    GroundTruth: rig_to_dict,
}


def dump_artifact(
    artifact: Any,
    path: Path | str,
    *,
    config_hash: str | None = None,
    seed: int | None = None,
) -> Path:
    """Write ``artifact`` as canonical JSON with provenance."""
    try:
        dumper = _DUMPERS[type(artifact)]
    except KeyError as exc:
        raise ArtifactError(f"no serializer for {type(artifact).__name__}") from exc
    payload = dumper(artifact)
    payload["provenance"] = _provenance(config_hash, seed)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dumps_canonical(payload), encoding="utf-8")
    return target


def read_payload(path: Path | str) -> dict[str, Any]:
    source = Path(path)
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ArtifactError(f"artifact not found: {source}") from exc
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{source}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ArtifactError(f"{source}: artifact must be a JSON object")
    return payload


def load_artifact(path: Path | str) -> tuple[Any, dict[str, Any]]:
    """Load a typed artifact and its provenance from ``path``."""
    payload = read_payload(path)
    kind = _require(payload, "kind", str(path))
    try:
        loader = _LOADERS[kind]
    except KeyError as exc:
        raise ArtifactError(f"{path}: unknown artifact kind {kind!r}") from exc
    provenance = payload.get("provenance") or {}
    return loader(payload), dict(provenance)


def roundtrip_io(path: Path | str) -> str:
    """Parse an artifact and serialize it again; the result equals the file bytes."""
    artifact, provenance = load_artifact(path)
    payload = _DUMPERS[type(artifact)](artifact)
    payload["provenance"] = _provenance(
        provenance.get("config_hash"), provenance.get("seed")
    )
    return dumps_canonical(payload)
