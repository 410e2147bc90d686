"""Experiment configuration: a strict JSON-compatible schema.

Unknown keys are errors, not warnings, so ablations cannot silently carry
typos. ``normalize_config`` validates a raw dict and returns a fully
defaulted copy; the ``build_*`` helpers turn normalized blocks into model,
conditioning and sampler objects.
"""

from __future__ import annotations

import numpy as np

from .denoiser import GaussianVideoModel, GmmVideoModel
from .errors import ConfigError
from .guidance import GuidanceConfig, GuidanceMode
from .latent import Conditioning
from .sampler import SamplerConfig, SamplerKind, default_guidance
from .schedule import DEFAULT_RHO, DEFAULT_SIGMA_MAX, DEFAULT_SIGMA_MIN, DEFAULT_STEPS

# Distinct Philox key salts so conditioning draws never collide with the
# sampler's (seed, t, phase) streams.
_CONDITIONING_SALT = 0x5EED_C0DE
_MEAN_SALT = 0x5EED_3EA7

MODEL_KINDS = ("point", "gauss", "ar1", "subspace", "gmm")

_MODEL_KEYS = {
    "point": {"kind", "frames", "dims", "mean_seed"},
    "gauss": {"kind", "frames", "dims", "mean_seed", "tau"},
    "ar1": {"kind", "frames", "dims", "mean_seed", "tau", "phi"},
    "subspace": {"kind", "frames", "dims", "rank", "scale", "basis_seed"},
    "gmm": {"kind", "frames", "dims", "weights", "variances", "means", "means_seed"},
}
_CONDITIONING_KEYS = {"mode", "seed", "identical", "c_start", "c_end", "metadata"}
_SAMPLER_KEYS = {"kind", "steps", "lambda", "sigma_min", "sigma_max", "rho"}
_GUIDANCE_KEYS = {"mode", "scale", "dds_enabled", "dds_iters"}
_RUN_KEYS = {"num_seeds", "base_seed", "out_dir", "dump_frames", "dump_trajectories", "workers"}
_TOP_KEYS = {"model", "conditioning", "sampler", "guidance", "run"}


def _require_mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(block, allowed, path):
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")


def _get_number(block, key, path, default=None, kind=float, minimum=None, maximum=None):
    value = block.get(key, default)
    if value is None:
        raise ConfigError(f"{path}.{key}", "missing required value")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
    value = kind(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{path}.{key}", f"must be <= {maximum}, got {value}")
    return value


def _get_bool(block, key, path, default):
    value = block.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}", f"expected a boolean, got {value!r}")
    return value


def _get_choice(block, key, path, choices, default):
    value = block.get(key, default)
    if value not in choices:
        raise ConfigError(f"{path}.{key}", f"must be one of {sorted(choices)}, got {value!r}")
    return value


def _normalize_model(raw):
    block = _require_mapping(raw, "model")
    kind = _get_choice(block, "kind", "model", MODEL_KINDS, "ar1")
    _reject_unknown(block, _MODEL_KEYS[kind], "model")
    out = {
        "kind": kind,
        "frames": int(_get_number(block, "frames", "model", 9, int, minimum=2)),
        "dims": int(_get_number(block, "dims", "model", 2, int, minimum=1)),
    }
    if kind in ("point", "gauss", "ar1"):
        seed = block.get("mean_seed")
        if seed is not None:
            seed = int(_get_number(block, "mean_seed", "model", None, int, minimum=0))
        out["mean_seed"] = seed
    if kind in ("gauss", "ar1"):
        out["tau"] = _get_number(block, "tau", "model", 1.0, float)
        if out["tau"] <= 0:
            raise ConfigError("model.tau", f"must be positive, got {out['tau']}")
    if kind == "ar1":
        out["phi"] = _get_number(block, "phi", "model", 0.9, float)
        if not -1.0 < out["phi"] < 1.0:
            raise ConfigError("model.phi", f"must be in (-1, 1), got {out['phi']}")
    if kind == "subspace":
        out["rank"] = int(_get_number(block, "rank", "model", 2, int, minimum=1))
        if out["rank"] > out["frames"] * out["dims"]:
            raise ConfigError("model.rank", "rank exceeds frames * dims")
        out["scale"] = _get_number(block, "scale", "model", 1.0, float)
        if out["scale"] <= 0:
            raise ConfigError("model.scale", f"must be positive, got {out['scale']}")
        out["basis_seed"] = int(_get_number(block, "basis_seed", "model", 0, int, minimum=0))
    if kind == "gmm":
        weights = block.get("weights", [0.5, 0.5])
        variances = block.get("variances", [0.25, 0.25])
        if not isinstance(weights, list) or not weights:
            raise ConfigError("model.weights", "expected a non-empty list")
        if not isinstance(variances, list) or len(variances) != len(weights):
            raise ConfigError("model.variances", "must have one entry per weight")
        out["weights"] = [float(w) for w in weights]
        out["variances"] = [float(v) for v in variances]
        if any(w <= 0 for w in out["weights"]) or abs(sum(out["weights"]) - 1.0) > 1e-9:
            raise ConfigError("model.weights", "weights must be positive and sum to 1")
        if any(v < 0 for v in out["variances"]):
            raise ConfigError("model.variances", "variances must be non-negative")
        means = block.get("means")
        if means is not None:
            out["means"] = [[[float(x) for x in frame] for frame in comp] for comp in means]
            out["means_seed"] = None
        else:
            out["means"] = None
            out["means_seed"] = int(_get_number(block, "means_seed", "model", 0, int, minimum=0))
    return out


def _normalize_conditioning(raw, model_cfg):
    block = _require_mapping(raw, "conditioning")
    _reject_unknown(block, _CONDITIONING_KEYS, "conditioning")
    mode = _get_choice(block, "mode", "conditioning", ("sample", "explicit"), "sample")
    out = {
        "mode": mode,
        "identical": _get_bool(block, "identical", "conditioning", False),
        "metadata": block.get("metadata", {}),
    }
    if not isinstance(out["metadata"], dict):
        raise ConfigError("conditioning.metadata", "expected an object")
    if mode == "sample":
        if "c_start" in block or "c_end" in block:
            raise ConfigError("conditioning", "explicit frames are only valid with mode 'explicit'")
        out["seed"] = int(_get_number(block, "seed", "conditioning", 0, int, minimum=0))
    else:
        dims = model_cfg["dims"]
        c_start = block.get("c_start")
        if not isinstance(c_start, list) or len(c_start) != dims:
            raise ConfigError("conditioning.c_start", f"expected a list of {dims} numbers")
        out["c_start"] = [float(x) for x in c_start]
        if out["identical"] and "c_end" not in block:
            out["c_end"] = list(out["c_start"])
        else:
            c_end = block.get("c_end")
            if not isinstance(c_end, list) or len(c_end) != dims:
                raise ConfigError("conditioning.c_end", f"expected a list of {dims} numbers")
            out["c_end"] = [float(x) for x in c_end]
        if out["identical"] and out["c_start"] != out["c_end"]:
            raise ConfigError("conditioning.identical", "c_start and c_end differ")
    return out


def _normalize_sampler(raw):
    block = _require_mapping(raw, "sampler")
    _reject_unknown(block, _SAMPLER_KEYS, "sampler")
    kind = _get_choice(block, "kind", "sampler", tuple(k.value for k in SamplerKind), "vibid")
    out = {
        "kind": kind,
        "steps": int(_get_number(block, "steps", "sampler", DEFAULT_STEPS, int, minimum=1)),
        "lambda": _get_number(block, "lambda", "sampler", 0.5, float, minimum=0.0, maximum=1.0),
        "sigma_min": _get_number(block, "sigma_min", "sampler", DEFAULT_SIGMA_MIN, float),
        "sigma_max": _get_number(block, "sigma_max", "sampler", DEFAULT_SIGMA_MAX, float),
        "rho": _get_number(block, "rho", "sampler", DEFAULT_RHO, float),
    }
    if not 0 < out["sigma_min"] < out["sigma_max"]:
        raise ConfigError("sampler.sigma_min", "need 0 < sigma_min < sigma_max")
    if out["rho"] <= 0:
        raise ConfigError("sampler.rho", f"must be positive, got {out['rho']}")
    return out


def _normalize_guidance(raw, sampler_cfg):
    if raw is None:
        preset = default_guidance(SamplerKind(sampler_cfg["kind"]))
        return {
            "mode": preset.mode.value,
            "scale": preset.scale,
            "dds_enabled": preset.dds_enabled,
            "dds_iters": preset.dds_iters,
        }
    block = _require_mapping(raw, "guidance")
    _reject_unknown(block, _GUIDANCE_KEYS, "guidance")
    mode = _get_choice(block, "mode", "guidance", ("cfg", "cfgpp"), "cfg")
    out = {
        "mode": mode,
        "scale": _get_number(block, "scale", "guidance", 1.0, float, minimum=0.0),
        "dds_enabled": _get_bool(block, "dds_enabled", "guidance", False),
        "dds_iters": int(_get_number(block, "dds_iters", "guidance", 1, int, minimum=0)),
    }
    if mode == "cfgpp" and out["scale"] > 1.0:
        raise ConfigError("guidance.scale", "CFG++ scale must be in [0, 1]")
    return out


def _normalize_run(raw):
    block = _require_mapping(raw, "run")
    _reject_unknown(block, _RUN_KEYS, "run")
    out_dir = block.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("run.out_dir", "expected a string path or null")
    return {
        "num_seeds": int(_get_number(block, "num_seeds", "run", 1, int, minimum=1)),
        "base_seed": int(_get_number(block, "base_seed", "run", 0, int, minimum=0)),
        "out_dir": out_dir,
        "dump_frames": _get_bool(block, "dump_frames", "run", False),
        "dump_trajectories": _get_bool(block, "dump_trajectories", "run", False),
        "workers": int(_get_number(block, "workers", "run", 1, int, minimum=1)),
    }


def normalize_config(raw: dict) -> dict:
    """Validate a raw config dict and return the fully defaulted copy."""
    raw = _require_mapping(raw, "")
    _reject_unknown(raw, _TOP_KEYS, "config" if raw else "")
    model = _normalize_model(raw.get("model", {}))
    conditioning = _normalize_conditioning(raw.get("conditioning", {}), model)
    sampler = _normalize_sampler(raw.get("sampler", {}))
    guidance = _normalize_guidance(raw.get("guidance"), sampler)
    run = _normalize_run(raw.get("run", {}))
    return {
        "model": model,
        "conditioning": conditioning,
        "sampler": sampler,
        "guidance": guidance,
        "run": run,
    }


def build_model(model_cfg: dict):
    kind = model_cfg["kind"]
    frames, dims = model_cfg["frames"], model_cfg["dims"]
    if kind in ("point", "gauss", "ar1"):
        seed = model_cfg.get("mean_seed")
        if seed is None:
            mean = np.zeros((frames, dims))
        else:
            gen = np.random.Generator(
                np.random.Philox(key=np.array([seed, _MEAN_SALT], dtype=np.uint64))
            )
            mean = gen.standard_normal((frames, dims))
        if kind == "point":
            return GaussianVideoModel.point_mass(mean)
        if kind == "gauss":
            return GaussianVideoModel.isotropic(mean, model_cfg["tau"])
        return GaussianVideoModel.ar1(mean, model_cfg["tau"], model_cfg["phi"])
    if kind == "subspace":
        return GaussianVideoModel.random_subspace(
            frames, dims, model_cfg["rank"], model_cfg["basis_seed"], model_cfg["scale"]
        )
    if kind == "gmm":
        k = len(model_cfg["weights"])
        if model_cfg["means"] is not None:
            means = np.asarray(model_cfg["means"], dtype=np.float64)
            if means.shape != (k, frames, dims):
                raise ConfigError("model.means", f"expected shape ({k}, {frames}, {dims})")
        else:
            gen = np.random.Generator(
                np.random.Philox(key=np.array([model_cfg["means_seed"], _MEAN_SALT], dtype=np.uint64))
            )
            means = gen.standard_normal((k, frames, dims))
        return GmmVideoModel(
            weights=np.asarray(model_cfg["weights"]),
            means=means,
            variances=np.asarray(model_cfg["variances"]),
        )
    raise ConfigError("model.kind", f"unhandled kind {kind!r}")


def build_conditioning(cond_cfg: dict, model) -> Conditioning:
    if cond_cfg["mode"] == "explicit":
        c_start = np.asarray(cond_cfg["c_start"], dtype=np.float64)
        c_end = np.asarray(cond_cfg["c_end"], dtype=np.float64)
    else:
        gen = np.random.Generator(
            np.random.Philox(key=np.array([cond_cfg["seed"], _CONDITIONING_SALT], dtype=np.uint64))
        )
        truth = model.sample(gen)
        c_start, c_end = truth[0].copy(), truth[-1].copy()
    if cond_cfg["identical"]:
        c_end = c_start.copy()
    return Conditioning(c_start, c_end, dict(cond_cfg["metadata"]))


def build_sampler_config(sampler_cfg: dict, guidance_cfg: dict, seed: int) -> SamplerConfig:
    guidance = GuidanceConfig(
        mode=GuidanceMode(guidance_cfg["mode"]),
        scale=guidance_cfg["scale"],
        dds_enabled=guidance_cfg["dds_enabled"],
        dds_iters=guidance_cfg["dds_iters"],
    )
    return SamplerConfig(
        kind=SamplerKind(sampler_cfg["kind"]),
        steps=sampler_cfg["steps"],
        lam=sampler_cfg["lambda"],
        guidance=guidance,
        seed=seed,
        sigma_min=sampler_cfg["sigma_min"],
        sigma_max=sampler_cfg["sigma_max"],
        rho=sampler_cfg["rho"],
    )
