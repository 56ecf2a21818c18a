"""Tests for runtime settings loading."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from skeleton_discovery import settings
from skeleton_discovery.errors import ConfigError


def test_get_settings_reads_environment(
    monkeypatch: pytest.MonkeyPatch,
    tmp_path: Path,
) -> None:
    """Settings should respect environment variables and memoize the result."""
    monkeypatch.setenv("NM_THREADS", "3")
    monkeypatch.setenv("NM_LOG_LEVEL", "info")
    cfg_a = settings.get_settings(force_reload=True)
    cfg_b = settings.get_settings()
    assert cfg_a.threads == 3
    assert cfg_a.log_level == "INFO"
    assert cfg_a.cache_dir == (tmp_path / "cache").resolve()
    assert cfg_a is cfg_b


def test_threads_default_to_hardware_parallelism(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("NM_THREADS", raising=False)
    cfg = settings.get_settings(force_reload=True)
    assert cfg.threads == max(os.cpu_count() or 1, 1)
    assert cfg.log_level == "WARNING"


@pytest.mark.parametrize("value", ["zero", "0", "-2"])
def test_invalid_thread_count_is_a_config_error(
    monkeypatch: pytest.MonkeyPatch, value: str
) -> None:
    monkeypatch.setenv("NM_THREADS", value)
    with pytest.raises(ConfigError, match="NM_THREADS"):
        settings.get_settings(force_reload=True)


def test_invalid_log_level(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("NM_LOG_LEVEL", "chatty")
    with pytest.raises(ConfigError, match="NM_LOG_LEVEL"):
        settings.get_settings(force_reload=True)


def test_dotenv_file_is_loaded(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    """A dotenv file named by NM_DOTENV_PATH overrides the process environment."""
    env_file = tmp_path / "custom.env"
    env_file.write_text("NM_THREADS=5\n")
    monkeypatch.setenv("NM_DOTENV_PATH", str(env_file))
    cfg = settings.get_settings(force_reload=True)
    assert cfg.threads == 5
