"""Backend dispatch for the hot sampling kernels.

The compiled Cython extension is preferred when importable; otherwise the
pure-numpy fallback is used. ``FRAMEBRIDGE_BACKEND=python|compiled`` forces
a choice at import time, and :func:`use_backend` switches at runtime (used
by the parity tests and the backend benchmark).
"""

import os

from . import _numpy

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"python": _numpy}
if _core is not None:
    _BACKENDS["compiled"] = _core


def available_backends():
    return sorted(_BACKENDS)


def use_backend(name):
    """Select the active kernel backend. Returns the previous backend name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(
            f"backend {name!r} not available (have: {', '.join(available_backends())})"
        )
    previous = _active.NAME
    _active = _BACKENDS[name]
    return previous


def backend_name():
    return _active.NAME


_requested = os.environ.get("FRAMEBRIDGE_BACKEND")
if _requested:
    if _requested not in _BACKENDS:
        raise ImportError(
            f"FRAMEBRIDGE_BACKEND={_requested!r} but that backend is not available"
        )
    _active = _BACKENDS[_requested]
else:
    _active = _BACKENDS.get("compiled", _numpy)


def euler_step(x_t, x0_hat, ratio):
    return _active.euler_step(x_t, x0_hat, ratio)


def cfgpp_euler_step(x_t, x0_guided, x0_uncond, ratio):
    return _active.cfgpp_euler_step(x_t, x0_guided, x0_uncond, ratio)


def cfg_combine(cond, uncond, scale):
    return _active.cfg_combine(cond, uncond, scale)


def lerp(a, b, lam):
    return _active.lerp(a, b, lam)


def add_scaled(x, scale, eps):
    return _active.add_scaled(x, scale, eps)


def flip(v):
    return _active.flip(v)


def set_last_frame(v, target):
    return _active.set_last_frame(v, target)


def temporal_shrink_apply(evecs, weights, x, mean):
    return _active.temporal_shrink_apply(evecs, weights, x, mean)


def lowrank_shrink_apply(basis, weights, x, mean):
    return _active.lowrank_shrink_apply(basis, weights, x, mean)
