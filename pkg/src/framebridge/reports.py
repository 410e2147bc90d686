"""Serialized outputs: canonical JSON reports, CSV trajectories, raw dumps.

Canonical JSON is key-sorted with minimal separators and no timestamps,
so identical runs produce byte-identical files. The raw latent dump is a
fixed little-endian binary layout for bit-exact cross-implementation
comparison.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError

REPORT_SCHEMA_VERSION = 1

DUMP_MAGIC = b"VBDS"
DUMP_VERSION = 1
_DUMP_HEADER = struct.Struct("<4sHII")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def canonical_json(obj) -> str:
    """Key-sorted, locale-independent serialization with a trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(canonical_json(obj), encoding="ascii")
    return path


def write_latent_dump(path, video: np.ndarray) -> Path:
    """Raw dump: magic 'VBDS', u16 version, u32 frames, u32 dims, then
    frames*dims little-endian float64 values, frame-major."""
    video = np.ascontiguousarray(video, dtype=np.float64)
    if video.ndim != 2:
        raise InvalidParameterError(f"dump expects a (frames, dims) array, got shape {video.shape}")
    path = Path(path)
    header = _DUMP_HEADER.pack(DUMP_MAGIC, DUMP_VERSION, video.shape[0], video.shape[1])
    path.write_bytes(header + video.astype("<f8").tobytes(order="C"))
    return path


def read_latent_dump(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _DUMP_HEADER.size:
        raise InvalidParameterError("dump file truncated before header")
    magic, version, frames, dims = _DUMP_HEADER.unpack_from(data)
    if magic != DUMP_MAGIC:
        raise InvalidParameterError(f"bad magic {magic!r}, expected {DUMP_MAGIC!r}")
    if version != DUMP_VERSION:
        raise InvalidParameterError(f"unsupported dump version {version}")
    expected = _DUMP_HEADER.size + frames * dims * 8
    if len(data) != expected:
        raise InvalidParameterError(f"dump length {len(data)} != expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=_DUMP_HEADER.size)
    return values.reshape(frames, dims).astype(np.float64)


_TRAJECTORY_COLUMNS = (
    "seed",
    "t",
    "sigma_t",
    "sigma_prev",
    "dds_residual_fwd",
    "dds_residual_bwd",
    "offmanifold",
)


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)  # shortest round-trip form, locale-independent
    return value


def write_trajectories_csv(path, rows) -> Path:
    """Per-step trajectory log, one row per (seed, t), RFC-4180 quoting."""
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(_TRAJECTORY_COLUMNS)
        for row in rows:
            writer.writerow([_csv_cell(row.get(col)) for col in _TRAJECTORY_COLUMNS])
    return path


def trajectory_rows(seed: int, record) -> list:
    rows = []
    for step in record.steps:
        rows.append(
            {
                "seed": seed,
                "t": step.t,
                "sigma_t": step.sigma_t,
                "sigma_prev": step.sigma_prev,
                "dds_residual_fwd": step.dds_residual_fwd,
                "dds_residual_bwd": step.dds_residual_bwd,
                "offmanifold": step.offmanifold,
            }
        )
    return rows
