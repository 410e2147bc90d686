"""Quantitative measures for sampled videos.

These turn qualitative quality claims (endpoint fidelity, temporal
smoothness, staying on the data manifold) into numbers that the harness
aggregates and the acceptance suite thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .denoiser import BridgeResult, GaussianVideoModel
from .errors import InvalidParameterError, ShapeMismatchError
from .latent import Conditioning, as_video, flip


@dataclass(frozen=True)
class MetricReport:
    endpoint_start_err: float
    endpoint_end_err: float
    smoothness: Optional[float] = None
    offmanifold: Optional[float] = None
    bridge_mean_err: Optional[float] = None
    bridge_cov_err: Optional[float] = None


def endpoint_error(v: np.ndarray, cond: Conditioning) -> tuple[float, float]:
    """L2 distances of the first/last frames from the conditioning frames."""
    v = as_video(v)
    if v.shape[1] != cond.dims:
        raise ShapeMismatchError(f"video dim {v.shape[1]} does not match conditioning {cond.dims}")
    start = float(np.linalg.norm(v[0] - cond.c_start))
    end = float(np.linalg.norm(v[-1] - cond.c_end))
    return start, end


def offmanifold_distance(v: np.ndarray, model: GaussianVideoModel) -> float:
    """L2 distance from v to the model's support, closed under time reversal.

    A reversed video is as natural as the original (the backward sampling
    phase depends on exactly that), so the support is taken as the union of
    the model's support and its time-reversed image: the distance is the
    smaller of the orthogonal-complement residuals of v and flip(v).
    Exactly 0 for full-support models.
    """
    direct = model.support_distance(v)
    if direct == 0.0:
        return 0.0
    return min(direct, model.support_distance(flip(v)))


def smoothness(v: np.ndarray) -> float:
    """Mean squared second difference over frames; 0 for affine-in-index videos."""
    v = as_video(v)
    if v.shape[0] < 3:
        raise InvalidParameterError("smoothness needs at least 3 frames")
    second = v[2:] - 2.0 * v[1:-1] + v[:-2]
    return float(np.mean(np.sum(second * second, axis=1)))


def bridge_divergence(samples, oracle: BridgeResult) -> tuple[float, float]:
    """Max-abs deviation of empirical interior mean/covariance from the bridge.

    Accepts full videos (interior frames are sliced out) or already-interior
    videos matching the oracle's shape. Uses the unbiased covariance.
    """
    interior_shape = oracle.interior_mean.shape
    full_frames = interior_shape[0] + 2
    flat = []
    for s in samples:
        s = as_video(s)
        if s.shape == interior_shape:
            flat.append(s.reshape(-1))
        elif s.shape == (full_frames, interior_shape[1]):
            flat.append(s[1:-1].reshape(-1))
        else:
            raise ShapeMismatchError(
                f"sample shape {s.shape} matches neither the oracle interior "
                f"{interior_shape} nor the full video ({full_frames}, {interior_shape[1]})"
            )
    if len(flat) < 2:
        raise InvalidParameterError("bridge divergence needs at least 2 samples")
    data = np.stack(flat)
    emp_mean = data.mean(axis=0)
    centered = data - emp_mean
    emp_cov = centered.T @ centered / (data.shape[0] - 1)
    mean_err = float(np.max(np.abs(emp_mean - oracle.interior_mean.reshape(-1))))
    cov_err = float(np.max(np.abs(emp_cov - oracle.dense_cov())))
    return mean_err, cov_err
