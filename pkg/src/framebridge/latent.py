"""Video-latent arrays and their frame-axis manipulations.

A latent video is a C-contiguous float64 array of shape (frames, dims);
a frame is a float64 vector of shape (dims,). Operations allocate their
outputs and never mutate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels
from .errors import InvalidParameterError, ShapeMismatchError


def as_video(v, min_frames: int = 1) -> np.ndarray:
    """Coerce to a (frames, dims) float64 array and validate it."""
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"latent video must be 2-D (frames, dims), got shape {arr.shape}")
    if arr.shape[0] < min_frames or arr.shape[1] < 1:
        raise ShapeMismatchError(
            f"latent video needs at least {min_frames} frame(s) and 1 dim, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise InvalidParameterError("latent video contains non-finite entries")
    return arr


def as_frame(c) -> np.ndarray:
    """Coerce to a (dims,) float64 frame vector and validate it."""
    arr = np.ascontiguousarray(c, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ShapeMismatchError(f"frame must be 1-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidParameterError("frame contains non-finite entries")
    return arr


def flip(v: np.ndarray) -> np.ndarray:
    """Reverse the frame order: frame i of the output is frame F-1-i of the input."""
    return _kernels.flip(as_video(v))


def extract_last_frame(v: np.ndarray) -> np.ndarray:
    """The last-frame selection operator: returns frame F-1 as a copy."""
    return as_video(v)[-1].copy()


def lerp(a: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """Elementwise lam*a + (1-lam)*b with lam in [0, 1]."""
    a = as_video(a)
    b = as_video(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"lerp operands differ in shape: {a.shape} vs {b.shape}")
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameterError(f"interpolation ratio must be in [0, 1], got {lam}")
    return _kernels.lerp(a, b, float(lam))


@dataclass(frozen=True)
class Conditioning:
    """Start/end endpoint frames plus opaque metadata tags.

    Metadata (fps, motion id, ...) is carried verbatim and never interpreted.
    """

    c_start: np.ndarray
    c_end: np.ndarray
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "c_start", as_frame(self.c_start))
        object.__setattr__(self, "c_end", as_frame(self.c_end))
        if self.c_start.shape != self.c_end.shape:
            raise ShapeMismatchError(
                f"c_start and c_end differ in dimension: {self.c_start.shape[0]} vs {self.c_end.shape[0]}"
            )

    @property
    def dims(self) -> int:
        return self.c_start.shape[0]

    def swapped(self) -> "Conditioning":
        return Conditioning(self.c_end, self.c_start, dict(self.metadata))
