"""Point-frame files and the NMVX binary voxel format."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import trimesh

from skeleton_discovery.errors import ArtifactError, InputError
from skeleton_discovery.types import BBox, PointFrame, VoxelSequence

NMVX_MAGIC = b"NMVX"
NMVX_VERSION = 1

_NMVX_HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("frames", "<u4"),
        ("gx", "<u4"),
        ("gy", "<u4"),
        ("gz", "<u4"),
        ("bbox", "<f8", (6,)),
    ]
)

POINT_SUFFIXES = (".ply", ".obj")


def read_vertices(path: Path | str) -> np.ndarray:
    """Vertex positions of an ASCII/binary PLY or OBJ file as (N, 3) floats."""
    source = Path(path)
    if not source.is_file():
        raise InputError(f"point file not found: {source}")
    try:
        loaded = trimesh.load(source, process=False)
    except Exception as exc:  # trimesh raises a variety of parser errors
        raise InputError(f"{source}: cannot parse point file: {exc}") from exc
    if isinstance(loaded, trimesh.Scene):
        if not loaded.geometry:
            return np.zeros((0, 3))
        loaded = loaded.dump(concatenate=True)
    vertices = getattr(loaded, "vertices", None)
    if vertices is None:
        raise InputError(f"{source}: file holds no vertex data")
    return np.asarray(vertices, dtype=np.float64).reshape(-1, 3)


def list_point_files(directory: Path | str) -> list[Path]:
    root = Path(directory)
    if not root.is_dir():
        raise InputError(f"input directory not found: {root}")
    files = sorted(
        (p for p in root.iterdir() if p.suffix.lower() in POINT_SUFFIXES),
        key=lambda p: p.name,
    )
    if not files:
        raise InputError(f"no .ply or .obj frames in {root}")
    return files


def read_point_frames(directory: Path | str) -> list[PointFrame]:
    """Read one frame per file, ordered lexicographically by file name."""
    frames = []
    for path in list_point_files(directory):
        vertices = read_vertices(path)
        frames.append(PointFrame(vertices, is_padding=vertices.shape[0] == 0))
    return frames


def write_point_frame(points: np.ndarray, path: Path | str) -> Path:
    """Write ``points`` as an ASCII PLY vertex list."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    cloud = trimesh.PointCloud(np.asarray(points, dtype=np.float64))
    cloud.export(target, file_type="ply", encoding="ascii")
    return target


def _bytes_per_frame(resolution: Sequence[int]) -> int:
    cells = int(np.prod(resolution))
    return (cells + 7) // 8


def encode_voxel_sequence(voxels: VoxelSequence) -> bytes:
    """Serialize to NMVX: fixed header then bit-packed x-fastest frames."""
    header = np.zeros((), dtype=_NMVX_HEADER)
    header["magic"] = NMVX_MAGIC
    header["version"] = NMVX_VERSION
    header["frames"] = voxels.frame_count
    header["gx"], header["gy"], header["gz"] = voxels.resolution
    header["bbox"] = np.concatenate([voxels.bbox.minimum, voxels.bbox.maximum])
    chunks = [header.tobytes()]
    for grid in voxels.occupancy:
        chunks.append(np.packbits(grid.ravel(order="F"), bitorder="little").tobytes())
    return b"".join(chunks)


def decode_voxel_sequence(data: bytes, *, source: str = "<bytes>") -> VoxelSequence:
    if len(data) < _NMVX_HEADER.itemsize:
        raise ArtifactError(f"{source}: truncated NMVX header")
    header = np.frombuffer(data, dtype=_NMVX_HEADER, count=1)[0]
    if bytes(header["magic"]) != NMVX_MAGIC:
        raise ArtifactError(f"{source}: field 'magic' is not NMVX")
    if int(header["version"]) != NMVX_VERSION:
        raise ArtifactError(f"{source}: field 'version' {int(header['version'])} unsupported")
    frames = int(header["frames"])
    resolution = (int(header["gx"]), int(header["gy"]), int(header["gz"]))
    stride = _bytes_per_frame(resolution)
    body = data[_NMVX_HEADER.itemsize :]
    if frames < 1 or min(resolution) < 1 or len(body) != frames * stride:
        raise ArtifactError(f"{source}: occupancy payload does not match header")

    cells = int(np.prod(resolution))
    grids = []
    for index in range(frames):
        packed = np.frombuffer(body, dtype=np.uint8, count=stride, offset=index * stride)
        bits = np.unpackbits(packed, count=cells, bitorder="little").astype(bool)
        grids.append(bits.reshape(resolution, order="F"))
    bbox = np.asarray(header["bbox"], dtype=np.float64)
    return VoxelSequence(occupancy=np.stack(grids), bbox=BBox(bbox[:3], bbox[3:]))


def write_voxel_sequence(voxels: VoxelSequence, path: Path | str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_voxel_sequence(voxels))
    return target


def read_voxel_sequence(path: Path | str) -> VoxelSequence:
    source = Path(path)
    if not source.is_file():
        raise ArtifactError(f"voxel file not found: {source}")
    return decode_voxel_sequence(source.read_bytes(), source=str(source))
