"""Sampling loops: plain Euler, parallel fusion, and bidirectional sampling.

The bidirectional step denoises along the temporally forward path
(conditioned on the start frame), re-noises back to the current level,
flips the video, and denoises along the backward path (conditioned on the
end frame) before flipping back. The fusion baseline instead runs both
paths in parallel from the same state and linearly blends them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import _kernels
from .denoiser import DenoiserModel, GaussianVideoModel
from .errors import InvalidParameterError, ShapeMismatchError
from .guidance import GuidanceConfig, GuidanceMode, cfg_combine, dds_guide
from .latent import Conditioning, as_video, flip, lerp
from .metrics import offmanifold_distance
from .schedule import (
    DEFAULT_RHO,
    DEFAULT_SIGMA_MAX,
    DEFAULT_SIGMA_MIN,
    DEFAULT_STEPS,
    karras_schedule,
)

_PHASE_INIT = 0
_PHASE_STEP = 1


class SamplerKind(str, enum.Enum):
    EULER = "euler"
    FUSION = "fusion"
    BIDI_VANILLA = "bidi"
    VIBID_FULL = "vibid"


def default_guidance(kind: SamplerKind) -> GuidanceConfig:
    """Per-kind guidance presets: the full bidirectional sampler turns on
    endpoint guidance and CFG++; everything else defaults to plain CFG."""
    if kind is SamplerKind.VIBID_FULL:
        return GuidanceConfig(mode=GuidanceMode.CFGPP, scale=1.0, dds_enabled=True, dds_iters=1)
    return GuidanceConfig(mode=GuidanceMode.CFG, scale=1.0, dds_enabled=False)


@dataclass(frozen=True)
class SamplerConfig:
    kind: SamplerKind = SamplerKind.VIBID_FULL
    steps: int = DEFAULT_STEPS
    lam: float = 0.5  # fusion interpolation ratio
    guidance: Optional[GuidanceConfig] = None
    seed: int = 0
    sigma_min: float = DEFAULT_SIGMA_MIN
    sigma_max: float = DEFAULT_SIGMA_MAX
    rho: float = DEFAULT_RHO

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind(self.kind))
        if self.steps < 1:
            raise InvalidParameterError(f"steps must be >= 1, got {self.steps}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidParameterError(f"fusion ratio must be in [0, 1], got {self.lam}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError("seed must fit in an unsigned 64-bit integer")

    def resolved_guidance(self) -> GuidanceConfig:
        return self.guidance if self.guidance is not None else default_guidance(self.kind)


class NoiseStream:
    """Counter-based random stream, split by (seed, timestep, phase).

    Each (t, phase) pair gets an independent Philox generator, so draws
    are reproducible regardless of evaluation order and independent
    across seeds running in parallel.
    """

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise InvalidParameterError("seed must fit in an unsigned 64-bit integer")
        self.seed = int(seed)

    def generator(self, t: int, phase: int) -> np.random.Generator:
        key = np.array([self.seed, 2 * t + phase], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass
class StepLog:
    t: int
    sigma_t: float
    sigma_prev: float
    dds_residual_fwd: Optional[float] = None
    dds_residual_bwd: Optional[float] = None
    offmanifold: Optional[float] = None
    state: Optional[np.ndarray] = None
    estimate_fwd: Optional[np.ndarray] = None
    estimate_bwd: Optional[np.ndarray] = None


@dataclass
class TrajectoryRecord:
    steps: List[StepLog] = field(default_factory=list)
    nfe: int = 0


class _CountingModel:
    """Transparent denoiser wrapper counting batched-pair evaluations."""

    def __init__(self, model: DenoiserModel):
        self._model = model
        self.count = 0
        self.frames = model.frames
        self.dims = model.dims

    def denoise(self, x, sigma, c):
        self.count += 1
        return self._model.denoise(x, sigma, c)

    def __getattr__(self, name):
        return getattr(self._model, name)


# -- primitive steps -----------------------------------------------------


def _check_step_sigmas(sigma_t: float, sigma_prev: float):
    if sigma_t <= 0:
        raise InvalidParameterError(f"sigma_t must be positive, got {sigma_t}")
    if not 0 <= sigma_prev <= sigma_t:
        raise InvalidParameterError(
            f"need 0 <= sigma_prev <= sigma_t, got sigma_prev={sigma_prev}, sigma_t={sigma_t}"
        )


def euler_step(x_t, x0_hat, sigma_t: float, sigma_prev: float) -> np.ndarray:
    """x0_hat + (sigma_prev / sigma_t) * (x_t - x0_hat)."""
    x_t = as_video(x_t)
    x0_hat = as_video(x0_hat)
    if x_t.shape != x0_hat.shape:
        raise ShapeMismatchError(f"state/estimate shapes differ: {x_t.shape} vs {x0_hat.shape}")
    _check_step_sigmas(sigma_t, sigma_prev)
    return _kernels.euler_step(x_t, x0_hat, sigma_prev / sigma_t)


def cfgpp_euler_step(x_t, x0_guided, x0_uncond, sigma_t: float, sigma_prev: float) -> np.ndarray:
    """Euler step whose re-noising direction uses the unconditional estimate."""
    x_t = as_video(x_t)
    x0_guided = as_video(x0_guided)
    x0_uncond = as_video(x0_uncond)
    if not (x_t.shape == x0_guided.shape == x0_uncond.shape):
        raise ShapeMismatchError("state and estimates must share one shape")
    _check_step_sigmas(sigma_t, sigma_prev)
    return _kernels.cfgpp_euler_step(x_t, x0_guided, x0_uncond, sigma_prev / sigma_t)


def renoise(x_prev, sigma_t: float, sigma_prev: float, rng: np.random.Generator) -> np.ndarray:
    """Add fresh noise of scale sqrt(sigma_t^2 - sigma_prev^2)."""
    x_prev = as_video(x_prev)
    if not 0 <= sigma_prev <= sigma_t:
        raise InvalidParameterError(
            f"negative radicand: need sigma_t >= sigma_prev >= 0, "
            f"got sigma_t={sigma_t}, sigma_prev={sigma_prev}"
        )
    scale = math.sqrt(sigma_t * sigma_t - sigma_prev * sigma_prev)
    eps = rng.standard_normal(x_prev.shape)
    return _kernels.add_scaled(x_prev, scale, eps)


def _guided_half_step(x, model, c_cond, dds_target, sigma_t, sigma_prev, guidance):
    """One conditioned denoise + combine + optional endpoint guidance + step.

    Returns (next state, pre-correction endpoint residual or None, estimate).
    """
    pair = model.denoise(x, sigma_t, c_cond)
    est = cfg_combine(pair.cond, pair.uncond, guidance.scale)
    residual = None
    if guidance.dds_enabled:
        residual = float(np.linalg.norm(dds_target - est[-1]))
        est = dds_guide(est, dds_target, guidance.dds_iters)
    if guidance.mode is GuidanceMode.CFGPP:
        x_next = cfgpp_euler_step(x, est, pair.uncond, sigma_t, sigma_prev)
    else:
        x_next = euler_step(x, est, sigma_t, sigma_prev)
    return x_next, residual, est


def fusion_step(
    x_t,
    model: DenoiserModel,
    cond: Conditioning,
    sigma_t: float,
    sigma_prev: float,
    lam: float,
    guidance: GuidanceConfig,
    log: Optional[StepLog] = None,
) -> np.ndarray:
    """Parallel forward/backward conditioned steps blended with ratio lam."""
    x_fwd, res_f, est_f = _guided_half_step(
        x_t, model, cond.c_start, cond.c_end, sigma_t, sigma_prev, guidance
    )
    x_flip = flip(x_t)
    x_bwd, res_b, est_b = _guided_half_step(
        x_flip, model, cond.c_end, cond.c_start, sigma_t, sigma_prev, guidance
    )
    if log is not None:
        log.dds_residual_fwd = res_f
        log.dds_residual_bwd = res_b
        log.estimate_fwd = est_f
        log.estimate_bwd = est_b
    return lerp(x_fwd, flip(x_bwd), lam)


def bidi_step(
    x_t,
    model: DenoiserModel,
    cond: Conditioning,
    sigma_t: float,
    sigma_prev: float,
    guidance: GuidanceConfig,
    rng: np.random.Generator,
    log: Optional[StepLog] = None,
) -> np.ndarray:
    """One bidirectional step: forward half, re-noise, flip, backward half."""
    x_prev, res_f, est_f = _guided_half_step(
        x_t, model, cond.c_start, cond.c_end, sigma_t, sigma_prev, guidance
    )
    x_renoised = renoise(x_prev, sigma_t, sigma_prev, rng)
    x_flip = flip(x_renoised)
    x_bwd, res_b, est_b = _guided_half_step(
        x_flip, model, cond.c_end, cond.c_start, sigma_t, sigma_prev, guidance
    )
    if log is not None:
        log.dds_residual_fwd = res_f
        log.dds_residual_bwd = res_b
        log.estimate_fwd = est_f
        log.estimate_bwd = est_b
    return flip(x_bwd)


# -- full sampling loop ----------------------------------------------------


def sample(
    config: SamplerConfig,
    model: DenoiserModel,
    cond: Conditioning,
    rng: Optional[NoiseStream] = None,
    record_states: bool = False,
    record_offmanifold: bool = False,
):
    """Run the configured sampler down the schedule.

    Draws x_T = sigma_max * eps, iterates the per-step operation for
    t = T..1 and returns (x0, TrajectoryRecord). Deterministic given the
    stream seed.
    """
    if model.frames < 2:
        raise InvalidParameterError("sampling needs at least 2 frames")
    if cond.dims != model.dims:
        raise ShapeMismatchError(
            f"conditioning dimension {cond.dims} does not match model dims {model.dims}"
        )
    guidance = config.resolved_guidance()
    sched = karras_schedule(config.steps, config.sigma_min, config.sigma_max, config.rho)
    stream = rng if rng is not None else NoiseStream(config.seed)
    counting = _CountingModel(model)
    can_measure = record_offmanifold and isinstance(model, GaussianVideoModel)

    x = sched.sigma_max * stream.generator(config.steps, _PHASE_INIT).standard_normal(
        (model.frames, model.dims)
    )
    record = TrajectoryRecord()
    for t, sigma_t, sigma_prev in sched.pairs():
        log = StepLog(t=t, sigma_t=sigma_t, sigma_prev=sigma_prev)
        if config.kind is SamplerKind.EULER:
            x, res, est = _guided_half_step(
                x, counting, cond.c_start, cond.c_end, sigma_t, sigma_prev, guidance
            )
            log.dds_residual_fwd = res
            log.estimate_fwd = est if record_states else None
        elif config.kind is SamplerKind.FUSION:
            x = fusion_step(x, counting, cond, sigma_t, sigma_prev, config.lam, guidance, log=log)
        else:
            x = bidi_step(
                x,
                counting,
                cond,
                sigma_t,
                sigma_prev,
                guidance,
                stream.generator(t, _PHASE_STEP),
                log=log,
            )
        if not record_states:
            log.estimate_fwd = None
            log.estimate_bwd = None
        else:
            log.state = x.copy()
        if can_measure:
            log.offmanifold = offmanifold_distance(x, model)
        record.steps.append(log)
    record.nfe = counting.count
    return x, record
