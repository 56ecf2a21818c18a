"""Runtime settings loading."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Final

from dotenv import load_dotenv

from skeleton_discovery.errors import ConfigError

_DEFAULT_CACHE_DIR: Final[str] = ".skeleton_cache"
_DEFAULT_LOG_LEVEL: Final[str] = "WARNING"

_CACHED_SETTINGS: Settings | None = None


@dataclass(frozen=True)
class Settings:
    """Runtime configuration derived from environment variables."""

    threads: int
    cache_dir: Path
    log_level: str


def _coerce_threads(value: str | None) -> int:
    """Parse ``NM_THREADS``; unset or blank means hardware parallelism."""
    if value is None or not value.strip():
        return max(os.cpu_count() or 1, 1)
    try:
        threads = int(value)
    except ValueError as exc:
        raise ConfigError(f"NM_THREADS must be an integer, got {value!r}") from exc
    if threads < 1:
        raise ConfigError(f"NM_THREADS must be >= 1, got {threads}")
    return threads


def _coerce_log_level(value: str | None) -> str:
    if value is None or not value.strip():
        return _DEFAULT_LOG_LEVEL
    normalized = value.strip().upper()
    if not isinstance(logging.getLevelName(normalized), int):
        raise ConfigError(f"NM_LOG_LEVEL is not a logging level: {value!r}")
    return normalized


def get_settings(*, force_reload: bool = False) -> Settings:
    """Load configuration, optionally reloading from the environment."""
    global _CACHED_SETTINGS  # noqa: PLW0603
    if not force_reload and _CACHED_SETTINGS is not None:
        return _CACHED_SETTINGS

    dotenv_override = os.getenv("NM_DOTENV_PATH")
    if dotenv_override:
        load_dotenv(dotenv_override, override=True)
    else:
        dotenv_path = Path.cwd() / ".env"
        if dotenv_path.exists():
            load_dotenv(dotenv_path=dotenv_path)

    cache_dir_raw = os.getenv("NM_CACHE_DIR", _DEFAULT_CACHE_DIR)
    cache_dir = Path(cache_dir_raw).expanduser().resolve()

    _CACHED_SETTINGS = Settings(
        threads=_coerce_threads(os.getenv("NM_THREADS")),
        cache_dir=cache_dir,
        log_level=_coerce_log_level(os.getenv("NM_LOG_LEVEL")),
    )
    return _CACHED_SETTINGS
