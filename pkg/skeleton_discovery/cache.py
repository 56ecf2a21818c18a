"""Disk-backed cache for voxelized sequences."""

from __future__ import annotations

import hashlib
import logging
from collections.abc import Sequence
from pathlib import Path

from skeleton_discovery.errors import ArtifactError
from skeleton_discovery.types import VoxelSequence
from skeleton_discovery.voxelize.io import decode_voxel_sequence, encode_voxel_sequence

logger = logging.getLogger(__name__)

VOXEL_NAMESPACE = "voxels"


def voxel_cache_key(
    files: Sequence[Path], resolution: Sequence[int], padding: float
) -> str:
    """Digest of the frame files (names and bytes) and voxelization parameters."""
    digest = hashlib.sha256()
    for path in files:
        digest.update(Path(path).name.encode("utf-8"))
        digest.update(b"\0")
        digest.update(Path(path).read_bytes())
        digest.update(b"\0")
    digest.update(repr((tuple(int(g) for g in resolution), float(padding))).encode("utf-8"))
    return digest.hexdigest()


class FileCache:
    """Stores payloads on disk under ``root/namespace/<sha256>.bin``."""

    def __init__(self, root: Path | str) -> None:
        self._root = Path(root)
        self._root.mkdir(parents=True, exist_ok=True)

    def get(self, namespace: str, key: str) -> bytes | None:
        path = self._path(namespace, key)
        if not path.exists():
            return None
        return path.read_bytes()

    def set(self, namespace: str, key: str, data: bytes) -> None:
        self._write_atomic(self._path(namespace, key), data)

    def get_voxels(self, key: str) -> VoxelSequence | None:
        """Decoded voxel sequence for ``key``; unreadable entries count as misses."""
        data = self.get(VOXEL_NAMESPACE, key)
        if data is None:
            return None
        try:
            return decode_voxel_sequence(data, source=f"cache entry {key[:12]}")
        except ArtifactError as exc:
            logger.warning("ignoring corrupt cache entry: %s", exc)
            return None

    def set_voxels(self, key: str, voxels: VoxelSequence) -> None:
        self.set(VOXEL_NAMESPACE, key, encode_voxel_sequence(voxels))

    def _path(self, namespace: str, key: str) -> Path:
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()
        directory = self._root / namespace
        directory.mkdir(parents=True, exist_ok=True)
        return directory / f"{digest}.bin"

    @staticmethod
    def _write_atomic(path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp_path = path.with_suffix(".tmp")
        tmp_path.write_bytes(data)
        tmp_path.replace(path)
