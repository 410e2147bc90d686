"""Pure-numpy implementations of the hot sampling kernels.

Reference semantics for the compiled backend; every function here must
agree with its counterpart in ``_core`` to float64 round-off. All inputs
are C-contiguous float64 arrays, videos are shaped (frames, dims), and
every kernel allocates its output.
"""

import numpy as np

NAME = "python"


def euler_step(x_t, x0_hat, ratio):
    # x0 + (sigma_prev/sigma_t) * (x_t - x0)
    return x0_hat + ratio * (x_t - x0_hat)


def cfgpp_euler_step(x_t, x0_guided, x0_uncond, ratio):
    # guided estimate, but the re-noising direction uses the unconditional one
    return x0_guided + ratio * (x_t - x0_uncond)


def cfg_combine(cond, uncond, scale):
    return uncond + scale * (cond - uncond)


def lerp(a, b, lam):
    return lam * a + (1.0 - lam) * b


def add_scaled(x, scale, eps):
    return x + scale * eps


def flip(v):
    return np.ascontiguousarray(v[::-1])


def set_last_frame(v, target):
    out = v.copy()
    out[-1] = target
    return out


def temporal_shrink_apply(evecs, weights, x, mean):
    # mean + V diag(w) V^T (x - mean), applied per latent dimension
    xc = x - mean
    return mean + evecs @ (weights[:, None] * (evecs.T @ xc))


def lowrank_shrink_apply(basis, weights, x, mean):
    # mean + U diag(w) U^T vec(x - mean); components outside span(U) vanish
    xc = (x - mean).reshape(-1)
    proj = basis @ (weights * (basis.T @ xc))
    return mean + proj.reshape(x.shape)
