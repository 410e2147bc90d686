"""Noise-level discretization and EDM preconditioning coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

DEFAULT_SIGMA_MIN = 0.002
DEFAULT_SIGMA_MAX = 700.0
DEFAULT_RHO = 7.0
DEFAULT_SIGMA_DATA = 0.5
DEFAULT_STEPS = 25


@dataclass(frozen=True)
class SigmaSchedule:
    """Noise levels sigma_0 .. sigma_T, indexed by timestep t.

    sigmas[0] is exactly 0.0 and the remaining levels are strictly
    increasing with t, so stepping t = T..1 walks down the schedule and
    the final Euler step lands on the denoised estimate.
    """

    sigmas: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.sigmas, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "sigmas", arr)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise InvalidParameterError("schedule needs at least one nonzero level plus sigma_0")
        if arr[0] != 0.0:
            raise InvalidParameterError("sigma_0 must be exactly 0")
        if not np.isfinite(arr).all() or (arr < 0).any():
            raise InvalidParameterError("all sigma levels must be finite and non-negative")
        if not (np.diff(arr) > 0).all():
            raise InvalidParameterError("sigma levels must be strictly increasing with t")

    @property
    def steps(self) -> int:
        return self.sigmas.shape[0] - 1

    @property
    def sigma_max(self) -> float:
        return float(self.sigmas[-1])

    def pairs(self):
        """(t, sigma_t, sigma_{t-1}) triples in sampling order t = T..1."""
        for t in range(self.steps, 0, -1):
            yield t, float(self.sigmas[t]), float(self.sigmas[t - 1])


@dataclass(frozen=True)
class PreconditionCoeffs:
    c_skip: float
    c_out: float
    c_in: float
    c_noise: float


def karras_schedule(
    steps: int,
    sigma_min: float = DEFAULT_SIGMA_MIN,
    sigma_max: float = DEFAULT_SIGMA_MAX,
    rho: float = DEFAULT_RHO,
) -> SigmaSchedule:
    """Power-law discretization of noise levels, plus an exact zero level.

    The T nonzero levels interpolate sigma_max down to sigma_min in
    sigma^(1/rho) space; sigma_0 = 0 is appended so the last step returns
    the denoised estimate. For steps == 1 the single nonzero level is
    sigma_max.
    """
    if steps < 1:
        raise InvalidParameterError(f"steps must be >= 1, got {steps}")
    if not (0.0 < sigma_min < sigma_max):
        raise InvalidParameterError(
            f"need 0 < sigma_min < sigma_max, got sigma_min={sigma_min}, sigma_max={sigma_max}"
        )
    if not math.isfinite(sigma_max):
        raise InvalidParameterError("sigma_max must be finite")
    if rho <= 0:
        raise InvalidParameterError(f"rho must be positive, got {rho}")

    if steps == 1:
        nonzero = np.array([sigma_max], dtype=np.float64)
    else:
        ramp = np.arange(steps, dtype=np.float64) / (steps - 1)
        max_inv_rho = sigma_max ** (1.0 / rho)
        min_inv_rho = sigma_min ** (1.0 / rho)
        # index 0 -> sigma_max ... index steps-1 -> sigma_min
        nonzero = (max_inv_rho + ramp * (min_inv_rho - max_inv_rho)) ** rho
        # pin the endpoints so they hold sigma_max/sigma_min exactly
        nonzero[0] = sigma_max
        nonzero[-1] = sigma_min

    sigmas = np.empty(steps + 1, dtype=np.float64)
    sigmas[0] = 0.0
    sigmas[1:] = nonzero[::-1]
    return SigmaSchedule(sigmas)


def edm_precondition(sigma: float, sigma_data: float = DEFAULT_SIGMA_DATA) -> PreconditionCoeffs:
    """Skip/output/input/noise scalings for a network-style denoiser.

    c_skip(0) = 1 and c_out(0) = 0, so the wrapper is the identity at zero
    noise; c_noise is -inf at sigma = 0.
    """
    if sigma < 0:
        raise InvalidParameterError(f"sigma must be non-negative, got {sigma}")
    if sigma_data <= 0:
        raise InvalidParameterError(f"sigma_data must be positive, got {sigma_data}")
    total = sigma * sigma + sigma_data * sigma_data
    c_skip = sigma_data * sigma_data / total
    c_out = sigma * sigma_data / math.sqrt(total)
    c_in = 1.0 / math.sqrt(total)
    c_noise = 0.25 * math.log(sigma) if sigma > 0 else float("-inf")
    return PreconditionCoeffs(c_skip=c_skip, c_out=c_out, c_in=c_in, c_noise=c_noise)
