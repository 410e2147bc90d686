"""Classifier-free guidance combiners and conjugate-gradient endpoint guidance.

Endpoint guidance solves min ||target - A(x)||^2 over x in x0 + K_l, where
K_l is the Krylov subspace explored by l CGLS iterations and A extracts the
last frame. For that selection operator one iteration is already exact, so
the default iteration count is 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidParameterError, ShapeMismatchError
from .latent import as_frame, as_video

CG_TOL = 1e-12


class GuidanceMode(str, enum.Enum):
    CFG = "cfg"
    CFGPP = "cfgpp"


@dataclass(frozen=True)
class GuidanceConfig:
    mode: GuidanceMode = GuidanceMode.CFG
    scale: float = 1.0
    dds_enabled: bool = False
    dds_iters: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", GuidanceMode(self.mode))
        if self.scale < 0:
            raise InvalidParameterError(f"guidance scale must be >= 0, got {self.scale}")
        if self.mode is GuidanceMode.CFGPP and self.scale > 1.0:
            raise InvalidParameterError(
                f"CFG++ guidance scale must be in [0, 1], got {self.scale}"
            )
        if self.dds_iters < 0:
            raise InvalidParameterError(f"dds_iters must be >= 0, got {self.dds_iters}")


def cfg_combine(cond: np.ndarray, uncond: np.ndarray, scale: float) -> np.ndarray:
    """uncond + scale * (cond - uncond)."""
    cond = as_video(cond)
    uncond = as_video(uncond)
    if cond.shape != uncond.shape:
        raise ShapeMismatchError(
            f"conditional/unconditional estimates differ in shape: {cond.shape} vs {uncond.shape}"
        )
    return _kernels.cfg_combine(cond, uncond, float(scale))


@dataclass(frozen=True)
class LastFrameSelector:
    """The linear operator A(x) = x_last on (frames, dims) videos."""

    frames: int
    dims: int

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return v[-1].copy()

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros((self.frames, self.dims))
        out[-1] = y
        return out


def cg_least_squares(op, y: np.ndarray, x_init: np.ndarray, iters: int) -> np.ndarray:
    """CGLS iterates on min ||y - A x||^2, started at x_init.

    ``op`` provides matvec (video -> data) and rmatvec (data -> video).
    The data-space residual norm is non-increasing per iteration; exits
    early once it drops below CG_TOL.
    """
    if iters < 0:
        raise InvalidParameterError(f"iteration count must be >= 0, got {iters}")
    x = np.array(x_init, dtype=np.float64, copy=True)
    r = np.asarray(y, dtype=np.float64) - op.matvec(x)
    s = op.rmatvec(r)
    p = s.copy()
    gamma = float(np.vdot(s, s).real)
    for _ in range(iters):
        if np.linalg.norm(r) < CG_TOL:
            break
        q = op.matvec(p)
        qq = float(np.vdot(q, q).real)
        if qq == 0.0:
            break  # p is in the null space; no further progress possible
        alpha = gamma / qq
        x += alpha * p
        r -= alpha * q
        s = op.rmatvec(r)
        gamma_new = float(np.vdot(s, s).real)
        if gamma == 0.0:
            break
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    return x


def dds_guide(x0_hat: np.ndarray, target: np.ndarray, iters: int) -> np.ndarray:
    """Drive the last frame of a denoised estimate toward a target frame.

    Runs ``iters`` CGLS iterations for the last-frame selection operator.
    For that operator the first iteration sets the last frame to the target
    exactly and leaves every other frame untouched; iters = 0 (or a zero
    residual) returns the estimate unchanged.
    """
    x0_hat = as_video(x0_hat)
    target = as_frame(target)
    if target.shape[0] != x0_hat.shape[1]:
        raise ShapeMismatchError(
            f"target frame has dim {target.shape[0]}, video has {x0_hat.shape[1]}"
        )
    if iters < 0:
        raise InvalidParameterError(f"iteration count must be >= 0, got {iters}")
    if iters == 0 or np.linalg.norm(target - x0_hat[-1]) < CG_TOL:
        return x0_hat.copy()
    return _kernels.set_last_frame(x0_hat, target)
