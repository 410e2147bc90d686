"""Pluggable denoiser contract plus analytic toy models.

The toy models have closed-form posterior means E[x0 | x_t], so every
sampler built on them can be verified against exact oracles. The
"conditional" branch of a denoiser conditions the data distribution on
frame 0 equal to the conditioning frame (start-frame conditioning); the
unconditional branch uses the unmodified prior.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Protocol, runtime_checkable

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .errors import InvalidParameterError, ShapeMismatchError
from .latent import as_frame, as_video
from .schedule import DEFAULT_SIGMA_DATA, edm_precondition

# Added to solve denominators so degenerate (point-mass / subspace)
# covariances stay invertible; never added to the numerator, so exactly
# singular directions shrink to zero and estimates stay on the support.
RIDGE = 1e-10

_EIG_TOL = 1e-12


class DenoisedPair(NamedTuple):
    cond: np.ndarray
    uncond: np.ndarray


@runtime_checkable
class DenoiserModel(Protocol):
    """Contract for pluggable denoisers: deterministic in (x, sigma, c)."""

    frames: int
    dims: int

    def denoise(self, x: np.ndarray, sigma: float, c: np.ndarray) -> DenoisedPair:
        ...


def _check_inputs(model, x, sigma) -> np.ndarray:
    x = as_video(x)
    if x.shape != (model.frames, model.dims):
        raise ShapeMismatchError(
            f"latent shape {x.shape} does not match model ({model.frames}, {model.dims})"
        )
    if sigma < 0:
        raise InvalidParameterError(f"sigma must be non-negative, got {sigma}")
    return x


@dataclass(frozen=True)
class GaussianVideoModel:
    """Gaussian video prior with structured covariance.

    Two structures are supported: a temporal covariance (frames x frames)
    applied independently per latent dimension (point-mass, isotropic and
    AR(1) models), and a low-rank factor over the flattened video
    (subspace models). Instances are immutable; the conditional-model
    cache is write-once per distinct conditioning frame.
    """

    kind: str
    mean: np.ndarray
    temporal_cov: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None

    def __post_init__(self):
        mean = as_video(self.mean)
        object.__setattr__(self, "mean", mean)
        f, d = mean.shape
        if (self.temporal_cov is None) == (self.basis is None):
            raise InvalidParameterError("exactly one of temporal_cov or basis must be given")
        if self.temporal_cov is not None:
            cov = np.ascontiguousarray(self.temporal_cov, dtype=np.float64)
            if cov.shape != (f, f):
                raise ShapeMismatchError(f"temporal covariance must be ({f}, {f}), got {cov.shape}")
            if not np.allclose(cov, cov.T, atol=1e-12):
                raise InvalidParameterError("temporal covariance must be symmetric")
            object.__setattr__(self, "temporal_cov", cov)
            evals, evecs = np.linalg.eigh(cov)
            evals = np.clip(evals, 0.0, None)
            object.__setattr__(self, "_evals", evals)
            object.__setattr__(self, "_evecs", np.ascontiguousarray(evecs))
        else:
            basis = np.ascontiguousarray(self.basis, dtype=np.float64)
            if basis.ndim != 2 or basis.shape[0] != f * d:
                raise ShapeMismatchError(
                    f"basis must be ({f * d}, rank), got {basis.shape}"
                )
            object.__setattr__(self, "basis", basis)
            u, sv, _ = np.linalg.svd(basis, full_matrices=False)
            object.__setattr__(self, "_evals", sv * sv)
            object.__setattr__(self, "_evecs", np.ascontiguousarray(u))
        object.__setattr__(self, "_cond_cache", {})

    # -- constructors -------------------------------------------------

    @classmethod
    def point_mass(cls, target) -> "GaussianVideoModel":
        target = as_video(target)
        return cls("point", target, temporal_cov=np.zeros((target.shape[0],) * 2))

    @classmethod
    def isotropic(cls, mean, tau: float) -> "GaussianVideoModel":
        mean = as_video(mean)
        if tau <= 0:
            raise InvalidParameterError(f"tau must be positive, got {tau}")
        return cls("isotropic", mean, temporal_cov=tau * tau * np.eye(mean.shape[0]))

    @classmethod
    def ar1(cls, mean, tau: float, phi: float) -> "GaussianVideoModel":
        """cov(frame_i, frame_j) = tau^2 phi^|i-j| per latent dimension."""
        mean = as_video(mean)
        if tau <= 0:
            raise InvalidParameterError(f"tau must be positive, got {tau}")
        if not -1.0 < phi < 1.0:
            raise InvalidParameterError(f"AR(1) parameter phi must be in (-1, 1), got {phi}")
        idx = np.arange(mean.shape[0])
        cov = tau * tau * phi ** np.abs(idx[:, None] - idx[None, :])
        return cls("ar1", mean, temporal_cov=cov)

    @classmethod
    def subspace(cls, mean, basis) -> "GaussianVideoModel":
        return cls("subspace", as_video(mean), basis=basis)

    @classmethod
    def random_subspace(
        cls, frames: int, dims: int, rank: int, seed: int, scale: float = 1.0
    ) -> "GaussianVideoModel":
        """Rank-k model with a random orthonormal basis and zero mean."""
        if not 1 <= rank <= frames * dims:
            raise InvalidParameterError(f"rank must be in [1, {frames * dims}], got {rank}")
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((frames * dims, rank))
        q, _ = np.linalg.qr(raw)
        return cls.subspace(np.zeros((frames, dims)), scale * q)

    # -- basic properties ---------------------------------------------

    @property
    def frames(self) -> int:
        return self.mean.shape[0]

    @property
    def dims(self) -> int:
        return self.mean.shape[1]

    @property
    def is_temporal(self) -> bool:
        return self.temporal_cov is not None

    def _eig_keep(self) -> np.ndarray:
        evals = self._evals
        return evals > _EIG_TOL * max(1.0, float(evals.max(initial=0.0)))

    # -- posterior mean (Tweedie) ---------------------------------------

    def posterior_mean(self, x, sigma: float, c=None) -> np.ndarray:
        """E[x0 | x_t = x] under the prior, or under the start-conditioned
        prior when a conditioning frame is given."""
        x = _check_inputs(self, x, sigma)
        if c is not None:
            return self._conditioned(as_frame(c)).posterior_mean(x, sigma)
        weights = self._evals / (self._evals + sigma * sigma + RIDGE)
        if self.is_temporal:
            return _kernels.temporal_shrink_apply(self._evecs, weights, x, self.mean)
        return _kernels.lowrank_shrink_apply(self._evecs, weights, x, self.mean)

    def denoise(self, x, sigma: float, c) -> DenoisedPair:
        x = _check_inputs(self, x, sigma)
        cond = self._conditioned(as_frame(c)).posterior_mean(x, sigma)
        uncond = self.posterior_mean(x, sigma)
        return DenoisedPair(cond=cond, uncond=uncond)

    # -- conditioning ---------------------------------------------------

    def _conditioned(self, c: np.ndarray) -> "GaussianVideoModel":
        key = c.tobytes()
        cached = self._cond_cache.get(key)
        if cached is None:
            cached = self.condition_on_start(c)
            if len(self._cond_cache) > 8:
                self._cond_cache.clear()
            self._cond_cache[key] = cached
        return cached

    def condition_on_start(self, c) -> "GaussianVideoModel":
        """The model with its data distribution conditioned on frame 0 = c."""
        c = as_frame(c)
        if c.shape[0] != self.dims:
            raise ShapeMismatchError(
                f"conditioning frame has dim {c.shape[0]}, model has {self.dims}"
            )
        if self.is_temporal:
            cov = self.temporal_cov
            gain = cov[:, 0] / (cov[0, 0] + RIDGE)
            mean = self.mean + np.outer(gain, c - self.mean[0])
            cond_cov = cov - np.outer(gain, cov[0, :])
            cond_cov = 0.5 * (cond_cov + cond_cov.T)
            return GaussianVideoModel(self.kind + "|cond", mean, temporal_cov=cond_cov)
        b = self.basis
        b0 = b[: self.dims, :]  # rows of frame 0
        gram = b0 @ b0.T + RIDGE * np.eye(self.dims)
        gain = np.linalg.solve(gram, b0).T  # (rank, dims)
        mean = self.mean + (b @ (gain @ (c - self.mean[0]))).reshape(self.mean.shape)
        shrink = np.eye(b.shape[1]) - gain @ b0
        shrink = 0.5 * (shrink + shrink.T)
        evals, evecs = np.linalg.eigh(shrink)
        factor = evecs * np.sqrt(np.clip(evals, 0.0, None))
        return GaussianVideoModel(self.kind + "|cond", mean, basis=b @ factor)

    # -- sampling, support, bridge --------------------------------------

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one video from the prior."""
        scale = np.sqrt(self._evals)
        if self.is_temporal:
            z = rng.standard_normal((self.frames, self.dims))
            return self.mean + self._evecs @ (scale[:, None] * z)
        z = rng.standard_normal(self._evals.shape[0])
        return self.mean + (self._evecs @ (scale * z)).reshape(self.mean.shape)

    def support_distance(self, v) -> float:
        """L2 distance from v to the support of the data distribution."""
        v = as_video(v)
        if v.shape != self.mean.shape:
            raise ShapeMismatchError(f"shape {v.shape} does not match model {self.mean.shape}")
        keep = self._eig_keep()
        if self.is_temporal:
            if keep.all():
                return 0.0
            resid = v - self.mean
            basis = self._evecs[:, keep]
            resid = resid - basis @ (basis.T @ resid)
            return float(np.linalg.norm(resid))
        if keep.sum() == self.frames * self.dims:
            return 0.0
        resid = (v - self.mean).reshape(-1)
        basis = self._evecs[:, keep]
        resid = resid - basis @ (basis.T @ resid)
        return float(np.linalg.norm(resid))

    def bridge(self, c_start, c_end) -> "BridgeResult":
        return bridge_oracle(self, c_start, c_end)


def gaussian_denoise(model: GaussianVideoModel, x, sigma: float, c=None) -> np.ndarray:
    """Posterior mean E[x0 | x_t = x(, frame 0 = c)] of a Gaussian model."""
    return model.posterior_mean(x, sigma, c)


# -- exact bridge (both endpoints pinned) -------------------------------


@dataclass(frozen=True)
class BridgeResult:
    """Exact law of the interior frames given both endpoint frames."""

    interior_mean: np.ndarray  # (frames-2, dims)
    dims: int
    temporal_cov: Optional[np.ndarray] = None  # (frames-2, frames-2), per dim
    vec_cov: Optional[np.ndarray] = None  # ((frames-2)*dims,)^2

    def dense_cov(self) -> np.ndarray:
        """Covariance over the flattened interior frames, frame-major."""
        if self.vec_cov is not None:
            return self.vec_cov
        return np.kron(self.temporal_cov, np.eye(self.dims))

    def marginal_std(self) -> np.ndarray:
        """Per-coordinate standard deviation, shaped like interior_mean."""
        var = np.clip(np.diag(self.dense_cov()), 0.0, None)
        return np.sqrt(var).reshape(self.interior_mean.shape)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n interior-frame videos from the bridge law, (n, F-2, D)."""
        cov = self.dense_cov()
        evals, evecs = np.linalg.eigh(cov)
        factor = evecs * np.sqrt(np.clip(evals, 0.0, None))
        z = rng.standard_normal((n, cov.shape[0]))
        flat = self.interior_mean.reshape(1, -1) + z @ factor.T
        return flat.reshape(n, *self.interior_mean.shape)


def _regularized(mat: np.ndarray, what: str) -> np.ndarray:
    scale = max(float(np.trace(mat)) / mat.shape[0], 1.0)
    eigmin = float(np.linalg.eigvalsh(mat)[0])
    if eigmin < _EIG_TOL * scale:
        warnings.warn(
            f"singular {what} block (min eigenvalue {eigmin:.3e}); using ridge-regularized solve",
            RuntimeWarning,
            stacklevel=3,
        )
        return mat + RIDGE * scale * np.eye(mat.shape[0])
    return mat


def bridge_oracle(model: GaussianVideoModel, c_start, c_end) -> BridgeResult:
    """Closed-form conditional law of frames 1..F-2 given the endpoints."""
    if not isinstance(model, GaussianVideoModel):
        raise InvalidParameterError("bridge oracle requires a Gaussian model")
    c_start = as_frame(c_start)
    c_end = as_frame(c_end)
    f, d = model.frames, model.dims
    if c_start.shape[0] != d or c_end.shape[0] != d:
        raise ShapeMismatchError("endpoint frames must match the model dimension")
    if f < 3:
        raise InvalidParameterError("bridge needs at least one interior frame")

    if model.is_temporal:
        cov = model.temporal_cov
        edge = np.array([0, f - 1])
        c_ee = _regularized(cov[np.ix_(edge, edge)], "endpoint covariance")
        c_ie = cov[1 : f - 1, edge]
        gain = np.linalg.solve(c_ee, c_ie.T).T  # (f-2, 2)
        delta = np.stack([c_start - model.mean[0], c_end - model.mean[-1]])
        interior_mean = model.mean[1 : f - 1] + gain @ delta
        cond_cov = cov[1 : f - 1, 1 : f - 1] - gain @ c_ie.T
        cond_cov = 0.5 * (cond_cov + cond_cov.T)
        return BridgeResult(interior_mean=interior_mean, dims=d, temporal_cov=cond_cov)

    b = model.basis
    b_edge = np.vstack([b[:d, :], b[-d:, :]])  # (2d, rank)
    b_int = b[d : (f - 1) * d, :]
    sig_ee = _regularized(b_edge @ b_edge.T, "endpoint covariance")
    gain = np.linalg.solve(sig_ee, b_edge @ b_int.T).T  # ((f-2)d, 2d)
    mu_vec = model.mean.reshape(-1)
    delta = np.concatenate([c_start - model.mean[0], c_end - model.mean[-1]])
    interior_mean = (mu_vec[d : (f - 1) * d] + gain @ delta).reshape(f - 2, d)
    cond_cov = b_int @ b_int.T - gain @ (b_edge @ b_int.T)
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    return BridgeResult(interior_mean=interior_mean, dims=d, vec_cov=cond_cov)


# -- isotropic Gaussian mixture -----------------------------------------


@dataclass(frozen=True)
class GmmVideoModel:
    """Mixture of isotropic Gaussians over videos.

    Component k has weight w_k, mean (frames, dims) and variance s_k^2 per
    coordinate. Responsibilities are evaluated in the log domain since
    sigma spans several orders of magnitude.
    """

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, frames, dims)
    variances: np.ndarray  # (K,)

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        m = np.ascontiguousarray(self.means, dtype=np.float64)
        v = np.ascontiguousarray(self.variances, dtype=np.float64)
        if m.ndim != 3:
            raise ShapeMismatchError(f"means must be (K, frames, dims), got {m.shape}")
        k = m.shape[0]
        if w.shape != (k,) or v.shape != (k,):
            raise ShapeMismatchError("weights/variances must have one entry per component")
        if (w <= 0).any() or not np.isclose(w.sum(), 1.0, atol=1e-12):
            raise InvalidParameterError("weights must be positive and sum to 1")
        if (v < 0).any():
            raise InvalidParameterError("component variances must be non-negative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)

    @property
    def frames(self) -> int:
        return self.means.shape[1]

    @property
    def dims(self) -> int:
        return self.means.shape[2]

    def posterior_mean(self, x, sigma: float) -> np.ndarray:
        x = _check_inputs(self, x, sigma)
        total = self.variances + sigma * sigma + RIDGE
        diff = x[None] - self.means  # (K, F, D)
        sq = np.einsum("kfd,kfd->k", diff, diff)
        n = self.frames * self.dims
        log_resp = np.log(self.weights) - 0.5 * (n * np.log(total) + sq / total)
        resp = np.exp(log_resp - logsumexp(log_resp))
        shrink = self.variances / total
        component_post = self.means + shrink[:, None, None] * diff
        return np.einsum("k,kfd->fd", resp, component_post)

    def denoise(self, x, sigma: float, c) -> DenoisedPair:
        x = _check_inputs(self, x, sigma)
        c = as_frame(c)
        if c.shape[0] != self.dims:
            raise ShapeMismatchError(f"conditioning frame has dim {c.shape[0]}, model has {self.dims}")
        uncond = self.posterior_mean(x, sigma)

        # Conditioning on frame 0 = c: isotropy makes frames independent, so
        # each component keeps its interior distribution and gets reweighted
        # by its frame-0 likelihood at c. The frame-0 posterior is exactly c.
        prior_var = self.variances + RIDGE
        d0 = c[None, :] - self.means[:, 0, :]
        log_w = (
            np.log(self.weights)
            - 0.5 * (self.dims * np.log(prior_var) + np.einsum("kd,kd->k", d0, d0) / prior_var)
        )
        total = self.variances + sigma * sigma + RIDGE
        diff_int = x[None, 1:] - self.means[:, 1:]  # interior frames only
        sq = np.einsum("kfd,kfd->k", diff_int, diff_int)
        n_int = (self.frames - 1) * self.dims
        log_resp = log_w - 0.5 * (n_int * np.log(total) + sq / total)
        resp = np.exp(log_resp - logsumexp(log_resp))
        shrink = self.variances / total
        cond = np.empty_like(x)
        cond[0] = c
        cond[1:] = np.einsum(
            "k,kfd->fd", resp, self.means[:, 1:] + shrink[:, None, None] * diff_int
        )
        return DenoisedPair(cond=cond, uncond=uncond)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        k = rng.choice(self.weights.shape[0], p=self.weights)
        z = rng.standard_normal((self.frames, self.dims))
        return self.means[k] + np.sqrt(self.variances[k]) * z


def gmm_denoise(model: GmmVideoModel, x, sigma: float) -> np.ndarray:
    """Tweedie posterior mean E[x0 | x_t = x] under the mixture prior."""
    return model.posterior_mean(x, sigma)


# -- network-style wrapper (Eq.-1-shaped assembly) -----------------------


@dataclass
class PreconditionedDenoiser:
    """Assembles a denoised estimate from a raw network-style callable.

    The callable receives (c_in * x, c_noise, condition-or-None) and its
    output is combined as c_skip * x + c_out * raw(...). Analytic models
    bypass this wrapper and return posterior means directly.
    """

    raw_fn: Callable[[np.ndarray, float, Optional[np.ndarray]], np.ndarray]
    frames: int
    dims: int
    sigma_data: float = DEFAULT_SIGMA_DATA

    def denoise(self, x, sigma: float, c) -> DenoisedPair:
        x = _check_inputs(self, x, sigma)
        coeffs = edm_precondition(sigma, self.sigma_data)
        scaled = coeffs.c_in * x

        def run(branch):
            out = as_video(self.raw_fn(scaled, coeffs.c_noise, branch))
            if out.shape != x.shape:
                raise ShapeMismatchError("raw denoiser changed the latent shape")
            return coeffs.c_skip * x + coeffs.c_out * out

        return DenoisedPair(cond=run(as_frame(c)), uncond=run(None))
