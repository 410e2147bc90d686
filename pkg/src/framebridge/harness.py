"""Experiment harness: seeded runs, paired comparisons, guidance-scale sweeps.

All entry points consume the strict config schema from :mod:`config`,
return plain-dict reports (canonically serializable) and optionally write
them to the configured output directory. Seeds fan out to a process pool
when ``run.workers`` > 1; results are ordered by seed before aggregation
so output is deterministic either way.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from .config import build_conditioning, build_model, build_sampler_config, normalize_config
from .denoiser import GaussianVideoModel, bridge_oracle
from .errors import ConfigError, NumericalError
from .metrics import (
    MetricReport,
    bridge_divergence,
    endpoint_error,
    offmanifold_distance,
    smoothness,
)
from .reports import (
    REPORT_SCHEMA_VERSION,
    canonical_json,
    trajectory_rows,
    write_json,
    write_latent_dump,
    write_trajectories_csv,
)
from .sampler import sample

_PER_SEED_METRICS = ("endpoint_start_err", "endpoint_end_err", "smoothness", "offmanifold", "nfe")


@dataclass(frozen=True)
class RunReport:
    config: dict
    per_seed: list
    aggregate: dict
    bridge: dict | None
    nfe_total: int

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": self.config,
            "per_seed": self.per_seed,
            "aggregate": self.aggregate,
            "bridge": self.bridge,
            "nfe_total": self.nfe_total,
        }


@lru_cache(maxsize=8)
def _experiment_parts(config_json: str):
    cfg = json.loads(config_json)
    model = build_model(cfg["model"])
    cond = build_conditioning(cfg["conditioning"], model)
    return cfg, model, cond


def _run_seed(config_json: str, seed: int):
    """One sampling run; returns per-seed metrics plus raw arrays for
    report-level statistics and dumps."""
    cfg, model, cond = _experiment_parts(config_json)
    sampler_cfg = build_sampler_config(cfg["sampler"], cfg["guidance"], seed)
    want_steps = cfg["run"]["dump_trajectories"]
    x0, record = sample(
        sampler_cfg, model, cond, record_offmanifold=want_steps
    )
    start_err, end_err = endpoint_error(x0, cond)
    metrics = MetricReport(
        endpoint_start_err=start_err,
        endpoint_end_err=end_err,
        smoothness=smoothness(x0) if model.frames >= 3 else None,
        offmanifold=(
            offmanifold_distance(x0, model) if isinstance(model, GaussianVideoModel) else None
        ),
    )
    entry = {"seed": seed, "nfe": record.nfe, **asdict(metrics)}
    interior = x0[1:-1].reshape(-1) if model.frames >= 3 else None
    rows = trajectory_rows(seed, record) if want_steps else None
    return entry, interior, x0, rows


def _quartiles(values):
    arr = np.asarray(values, dtype=np.float64)
    q1, q2, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    return {"median": float(q2), "iqr": float(q3 - q1)}


def _aggregate(per_seed):
    out = {}
    for name in _PER_SEED_METRICS:
        values = [e[name] for e in per_seed if e[name] is not None]
        if values:
            out[name] = _quartiles(values)
    return out


def run(config: dict) -> RunReport:
    """Execute num_seeds independent sampling runs and aggregate metrics."""
    cfg = normalize_config(config)
    config_json = canonical_json(cfg)
    run_cfg = cfg["run"]
    seeds = list(range(run_cfg["base_seed"], run_cfg["base_seed"] + run_cfg["num_seeds"]))

    if run_cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=run_cfg["workers"]) as pool:
            chunk = max(1, len(seeds) // (run_cfg["workers"] * 8))
            results = list(
                pool.map(_run_seed, [config_json] * len(seeds), seeds, chunksize=chunk)
            )
    else:
        results = [_run_seed(config_json, seed) for seed in seeds]
    results.sort(key=lambda r: r[0]["seed"])

    per_seed = [r[0] for r in results]
    bridge_stats = None
    _, model, cond = _experiment_parts(config_json)
    if isinstance(model, GaussianVideoModel) and model.frames >= 3:
        oracle = bridge_oracle(model, cond.c_start, cond.c_end)
        if len(seeds) >= 2:
            interiors = [r[1].reshape(oracle.interior_mean.shape) for r in results]
            mean_err, cov_err = bridge_divergence(interiors, oracle)
            bridge_stats = {"mean_err": mean_err, "cov_err": cov_err}

    report = RunReport(
        config=cfg,
        per_seed=per_seed,
        aggregate=_aggregate(per_seed),
        bridge=bridge_stats,
        nfe_total=int(sum(e["nfe"] for e in per_seed)),
    )

    if run_cfg["out_dir"] is not None:
        out_dir = Path(run_cfg["out_dir"])
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            write_json(out_dir / "report.json", report.to_dict())
            if run_cfg["dump_frames"]:
                for entry, _, x0, _ in results:
                    write_latent_dump(out_dir / f"frames_seed{entry['seed']}.vbds", x0)
            if run_cfg["dump_trajectories"]:
                rows = [row for _, _, _, seed_rows in results for row in seed_rows]
                write_trajectories_csv(out_dir / "trajectories.csv", rows)
        except OSError as exc:
            raise NumericalError(f"cannot write outputs under {out_dir}: {exc}") from exc
    return report


def _sign_test(deltas):
    pos = int(sum(1 for d in deltas if d > 0))
    neg = int(sum(1 for d in deltas if d < 0))
    ties = len(deltas) - pos - neg
    if pos + neg == 0:
        return {"pos": pos, "neg": neg, "ties": ties, "p_greater": 1.0, "p_less": 1.0}
    return {
        "pos": pos,
        "neg": neg,
        "ties": ties,
        "p_greater": float(binomtest(pos, pos + neg, alternative="greater").pvalue),
        "p_less": float(binomtest(pos, pos + neg, alternative="less").pvalue),
    }


def compare(config_a: dict, config_b: dict) -> dict:
    """Seed-matched comparison of two configs differing only in sampler or
    guidance. Positive deltas mean config A scored higher."""
    cfg_a = normalize_config(config_a)
    cfg_b = normalize_config(config_b)
    for block in ("model", "conditioning"):
        if cfg_a[block] != cfg_b[block]:
            raise ConfigError(block, "compare requires identical model and conditioning blocks")
    policy_a = {k: cfg_a["run"][k] for k in ("num_seeds", "base_seed")}
    policy_b = {k: cfg_b["run"][k] for k in ("num_seeds", "base_seed")}
    if policy_a != policy_b:
        raise ConfigError("run", f"seed policy mismatch: {policy_a} vs {policy_b}")

    report_a = run(config_a)
    report_b = run(config_b)
    metrics = {}
    for name in _PER_SEED_METRICS:
        pairs = [
            (ea[name], eb[name])
            for ea, eb in zip(report_a.per_seed, report_b.per_seed)
            if ea[name] is not None and eb[name] is not None
        ]
        if not pairs:
            continue
        deltas = [a - b for a, b in pairs]
        metrics[name] = {
            "median_a": _quartiles([a for a, _ in pairs])["median"],
            "median_b": _quartiles([b for _, b in pairs])["median"],
            "median_delta": _quartiles(deltas)["median"],
            "deltas": deltas,
            "sign_test": _sign_test(deltas),
        }
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config_a": cfg_a,
        "config_b": cfg_b,
        "metrics": metrics,
    }


def ablate_cfgpp_scale(base_config: dict, scales) -> dict:
    """One run batch per CFG++ scale; emits a metric-vs-scale table."""
    cfg = normalize_config(base_config)
    if cfg["guidance"]["mode"] != "cfgpp":
        raise ConfigError("guidance.mode", "scale ablation requires CFG++ mode")
    scales = list(scales)
    if not scales:
        raise ConfigError("scales", "expected at least one scale")
    for s in scales:
        if not 0.0 <= float(s) <= 1.0:
            raise ConfigError("scales", f"CFG++ scale must be in [0, 1], got {s}")

    table = []
    for s in scales:
        sweep_cfg = json.loads(canonical_json(cfg))
        sweep_cfg["guidance"]["scale"] = float(s)
        sweep_cfg["run"]["out_dir"] = None
        report = run(sweep_cfg)
        row = {"scale": float(s), "nfe_total": report.nfe_total}
        for name in ("endpoint_start_err", "endpoint_end_err", "smoothness", "offmanifold"):
            if name in report.aggregate:
                row[f"median_{name}"] = report.aggregate[name]["median"]
        if report.bridge is not None:
            row["bridge_mean_err"] = report.bridge["mean_err"]
            row["bridge_cov_err"] = report.bridge["cov_err"]
        table.append(row)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "base_config": cfg,
        "scales": [float(s) for s in scales],
        "table": table,
    }


def oracle_stats(config: dict) -> dict:
    """Analytic bridge statistics for the configured model/conditioning."""
    cfg = normalize_config(config)
    model = build_model(cfg["model"])
    if not isinstance(model, GaussianVideoModel):
        raise ConfigError("model.kind", "bridge oracle requires a Gaussian model")
    cond = build_conditioning(cfg["conditioning"], model)
    oracle = bridge_oracle(model, cond.c_start, cond.c_end)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": {"model": cfg["model"], "conditioning": cfg["conditioning"]},
        "c_start": cond.c_start.tolist(),
        "c_end": cond.c_end.tolist(),
        "interior_mean": oracle.interior_mean.tolist(),
        "marginal_std": oracle.marginal_std().tolist(),
        "dense_cov": oracle.dense_cov().tolist(),
    }
