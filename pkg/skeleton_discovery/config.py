"""Pipeline configuration loaded from one JSON file plus CLI overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from skeleton_discovery.affinity.losses import DEFAULT_VELOCITY_EPSILON
from skeleton_discovery.affinity.optimize import AffinityConfig
from skeleton_discovery.errors import ConfigError
from skeleton_discovery.keypoints.heatmaps import DEFAULT_SIGMA_G
from skeleton_discovery.keypoints.losses import DEFAULT_SIGMA_S
from skeleton_discovery.keypoints.optimize import KeypointConfig
from skeleton_discovery.kinematics.fit import DEFAULT_FIT_SETTINGS
from skeleton_discovery.optimize import DescentSettings
from skeleton_discovery.serialization import dumps_canonical
from skeleton_discovery.skeleton.extract import SkeletonConfig
from skeleton_discovery.skinning import DEFAULT_EPSILON

DEFAULT_GRID = 32
DEFAULT_OUTPUT_DIR = "skeleton_output"
_PATH_KEYS = ("input_dir", "output_dir", "ground_truth")


@dataclass(frozen=True)
class VoxelSection:
    resolution: tuple[int, int, int] = (DEFAULT_GRID, DEFAULT_GRID, DEFAULT_GRID)
    padding: float = 0.05

    def __post_init__(self) -> None:
        if len(self.resolution) != 3 or min(self.resolution) < 1:
            raise ConfigError(
                f"voxel.resolution must be three positive ints, got {self.resolution}"
            )
        if self.padding < 0.0:
            raise ConfigError("voxel.padding must be >= 0")


@dataclass(frozen=True)
class KeypointSection:
    count: int = 8
    sigma_g: float = DEFAULT_SIGMA_G
    sigma_s: float = DEFAULT_SIGMA_S
    lambda_vol: float = 10.0
    lambda_sparse: float = 5.0
    lambda_sep: float = 0.1
    lambda_smooth: float | None = None
    descent: DescentSettings = field(default_factory=DescentSettings)


@dataclass(frozen=True)
class AffinitySection:
    neighbors: int = 2
    lambda_traj: float = 1.0
    lambda_local: float = 0.001
    lambda_time: float = 1.0
    lambda_complex: float = 0.01
    velocity_epsilon: float = DEFAULT_VELOCITY_EPSILON
    descent: DescentSettings = field(default_factory=DescentSettings)


@dataclass(frozen=True)
class SkeletonSection:
    offset_mode: str = "observed"


@dataclass(frozen=True)
class SkinningSection:
    epsilon: float = DEFAULT_EPSILON
    kernel_sigma: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("skinning.epsilon must lie in [0, 1]")
        if self.kernel_sigma is not None and self.kernel_sigma <= 0.0:
            raise ConfigError("skinning.kernel_sigma must be > 0")


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of a pipeline run; stage configs are derived from it."""

    voxel: VoxelSection = field(default_factory=VoxelSection)
    keypoints: KeypointSection = field(default_factory=KeypointSection)
    affinity: AffinitySection = field(default_factory=AffinitySection)
    skeleton: SkeletonSection = field(default_factory=SkeletonSection)
    fit: DescentSettings = field(default_factory=lambda: DEFAULT_FIT_SETTINGS)
    skinning: SkinningSection = field(default_factory=SkinningSection)
    seed: int = 0
    input_dir: str | None = None
    output_dir: str = DEFAULT_OUTPUT_DIR
    ground_truth: str | None = None

    def __post_init__(self) -> None:
        # stage configs carry the range checks
        self.keypoint_config()
        self.affinity_config()
        self.skeleton_config()

    def keypoint_config(self) -> KeypointConfig:
        section = self.keypoints
        return KeypointConfig(
            count=section.count,
            sigma_g=section.sigma_g,
            sigma_s=section.sigma_s,
            lambda_vol=section.lambda_vol,
            lambda_sparse=section.lambda_sparse,
            lambda_sep=section.lambda_sep,
            lambda_smooth=section.lambda_smooth,
            descent=section.descent,
            seed=self.seed,
        )

    def affinity_config(self) -> AffinityConfig:
        section = self.affinity
        return AffinityConfig(
            neighbors=section.neighbors,
            lambda_traj=section.lambda_traj,
            lambda_local=section.lambda_local,
            lambda_time=section.lambda_time,
            lambda_complex=section.lambda_complex,
            velocity_epsilon=section.velocity_epsilon,
            descent=section.descent,
            seed=self.seed,
        )

    def skeleton_config(self) -> SkeletonConfig:
        return SkeletonConfig(
            neighbors=self.affinity.neighbors,
            offset_mode=self.skeleton.offset_mode,  # type: ignore[arg-type]
            seed=self.seed,
        )

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of every non-path setting."""
        payload = {k: v for k, v in self.to_dict().items() if k not in _PATH_KEYS}
        return hashlib.sha256(dumps_canonical(payload).encode("utf-8")).hexdigest()


def _coerce(value: Any, hint: Any, key: str) -> Any:
    if dataclasses.is_dataclass(hint):
        return _build(hint, value, key)
    origin = typing.get_origin(hint)
    if origin in (typing.Union, types.UnionType):
        options = typing.get_args(hint)
        if value is None and type(None) in options:
            return None
        inner = [option for option in options if option is not type(None)]
        return _coerce(value, inner[0], key)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list")
        args = typing.get_args(hint)
        if len(value) != len(args):
            raise ConfigError(f"{key} must have {len(args)} entries, got {len(value)}")
        return tuple(_coerce(item, arg, key) for item, arg in zip(value, args))
    if hint is bool or isinstance(value, bool):
        if hint is not bool or not isinstance(value, bool):
            raise ConfigError(f"{key} must be {hint.__name__}, got {value!r}")
        return value
    if hint is int:
        if not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value
    if hint is float:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}")
        return value
    raise ConfigError(f"{key}: unsupported setting type {hint!r}")


def _build(cls: type, payload: Any, prefix: str = "") -> Any:
    if not isinstance(payload, dict):
        raise ConfigError(f"{prefix or 'config'} must be a JSON object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    for key in payload:
        if key not in names:
            dotted = f"{prefix}.{key}" if prefix else key
            raise ConfigError(f"unknown config key {dotted!r}")
    kwargs = {
        key: _coerce(value, hints[key], f"{prefix}.{key}" if prefix else key)
        for key, value in payload.items()
    }
    return cls(**kwargs)


def config_from_dict(payload: dict[str, Any]) -> PipelineConfig:
    return _build(PipelineConfig, payload)


def load_config(path: Path | str | None = None) -> PipelineConfig:
    """Read a JSON config; ``None`` gives the defaults."""
    if path is None:
        return PipelineConfig()
    source = Path(path)
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {source}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON: {exc}") from exc
    return config_from_dict(payload)


def apply_overrides(
    config: PipelineConfig,
    *,
    seed: int | None = None,
    grid: int | None = None,
    keypoints: int | None = None,
    neighbors: int | None = None,
    offset_mode: str | None = None,
    input_dir: Path | str | None = None,
    output_dir: Path | str | None = None,
) -> PipelineConfig:
    """Return ``config`` with every non-``None`` flag applied."""
    changes: dict[str, Any] = {}
    if seed is not None:
        changes["seed"] = seed
    if grid is not None:
        changes["voxel"] = dataclasses.replace(config.voxel, resolution=(grid, grid, grid))
    if keypoints is not None:
        changes["keypoints"] = dataclasses.replace(config.keypoints, count=keypoints)
    if neighbors is not None:
        changes["affinity"] = dataclasses.replace(config.affinity, neighbors=neighbors)
    if offset_mode is not None:
        changes["skeleton"] = SkeletonSection(offset_mode=offset_mode)
    if input_dir is not None:
        changes["input_dir"] = str(input_dir)
    if output_dir is not None:
        changes["output_dir"] = str(output_dir)
    return dataclasses.replace(config, **changes) if changes else config
