"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines; every tolerance is pinned here, not deferred.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from framebridge.denoiser import GaussianVideoModel, bridge_oracle
from framebridge.guidance import GuidanceConfig, GuidanceMode, cfg_combine, dds_guide
from framebridge.harness import ablate_cfgpp_scale, compare, run
from framebridge.latent import Conditioning, flip
from framebridge.reports import canonical_json
from framebridge.sampler import (
    SamplerConfig,
    SamplerKind,
    cfgpp_euler_step,
    euler_step,
    renoise,
    sample,
)

DATA_DIR = Path(__file__).parent / "data"

# Endpoint tolerance for criteria 5 and 7: the spec ceiling of 1e-2 per unit
# of conditioning scale. The sampler's terminal resolution is far finer: the
# last backward half-step runs at sigma_1 = 0.002 where the conditioned
# posterior pins frame 0 up to the ridge leak eps/(eps + sigma_1^2) ~ 2.5e-5
# of the remaining mismatch (measured endpoint medians ~6e-8).
ENDPOINT_MEDIAN_TOL_FACTOR = 1e-2

AR1_MODEL_CFG = {"kind": "ar1", "frames": 9, "dims": 2, "tau": 1.0, "phi": 0.9}


def _report(num: int, name: str, ok: bool, detail: str = ""):
    line = f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" -- {detail}"
    print(line)
    assert ok, line


def _ar1_conditioning(seed=7):
    model = GaussianVideoModel.ar1(np.zeros((9, 2)), 1.0, 0.9)
    truth = model.sample(np.random.default_rng(seed))
    return model, Conditioning(truth[0], truth[-1])


def test_criterion_1_nfe_accounting():
    model, cond = _ar1_conditioning()
    nfes = {}
    for kind in (SamplerKind.VIBID_FULL, SamplerKind.BIDI_VANILLA, SamplerKind.EULER):
        _, record = sample(SamplerConfig(kind=kind, steps=25, seed=0), model, cond)
        nfes[kind.value] = record.nfe
    ok = nfes == {"vibid": 50, "bidi": 50, "euler": 25}
    _report(1, "NFE accounting", ok, f"vibid={nfes['vibid']} bidi={nfes['bidi']} euler={nfes['euler']}")


def test_criterion_2_step_identity_suite():
    rng = np.random.default_rng(0)
    x_t, x0, uncond = (rng.standard_normal((6, 3)) for _ in range(3))
    checks = {
        "euler(sigma_prev=0)=x0": np.max(np.abs(euler_step(x_t, x0, 1.3, 0.0) - x0)),
        "euler(sigma_prev=sigma_t)=x_t": np.max(np.abs(euler_step(x_t, x0, 1.3, 1.3) - x_t)),
        "cfg(a,a,w)=a": np.max(np.abs(cfg_combine(x0, x0, 3.7) - x0)),
        "cfgpp collapses": np.max(
            np.abs(cfgpp_euler_step(x_t, x0, x0, 1.3, 0.6) - euler_step(x_t, x0, 1.3, 0.6))
        ),
        "flip involution": np.max(np.abs(flip(flip(x_t)) - x_t)),
    }
    worst = max(checks.values())
    _report(2, "step identities", worst <= 1e-12, f"worst deviation {worst:.2e}")


def test_criterion_3_dds_exactness():
    rng = np.random.default_rng(1)
    frames, dims = 7, 3
    bit_ok = True
    residual_ok = True
    monotone_ok = True
    for _ in range(100):
        x0 = rng.standard_normal((frames, dims))
        target = rng.standard_normal(dims)
        out = dds_guide(x0, target, 1)
        bit_ok &= out[:-1].tobytes() == x0[:-1].tobytes()
        residual_ok &= float(np.linalg.norm(target - out[-1])) <= 1e-10
        previous = float(np.linalg.norm(target - x0[-1]))
        for iters in range(4):
            res = float(np.linalg.norm(target - dds_guide(x0, target, iters)[-1]))
            monotone_ok &= res <= previous + 1e-12
            previous = res
    ok = bit_ok and residual_ok and monotone_ok
    _report(
        3,
        "DDS exactness",
        ok,
        f"bit_unchanged={bit_ok} residual<=1e-10={residual_ok} monotone={monotone_ok}",
    )


def test_criterion_4_renoise_variance():
    rng = np.random.default_rng(2)
    draws = 100_000
    worst = 0.0
    for i in range(10):
        sigma_t = float(np.exp(rng.uniform(np.log(0.002), np.log(700.0))))
        sigma_prev = float(rng.uniform(0.0, sigma_t * 0.999))
        x = np.zeros((100, draws // 100))
        noise = renoise(x, sigma_t, sigma_prev, np.random.default_rng(100 + i)) - x
        target = sigma_t**2 - sigma_prev**2
        rel = abs(float(noise.var()) - target) / target
        worst = max(worst, rel)
    _report(4, "renoise variance", worst <= 0.02, f"worst relative error {worst:.4f} over 10 pairs")


def test_criterion_5_gaussian_bridge_oracle():
    n_seeds = 10_000
    model, cond = _ar1_conditioning(seed=7)
    oracle = bridge_oracle(model, cond.c_start, cond.c_end)
    config = SamplerConfig(
        kind=SamplerKind.VIBID_FULL,
        steps=25,
        guidance=GuidanceConfig(mode=GuidanceMode.CFGPP, scale=1.0, dds_enabled=True, dds_iters=1),
    )

    total = np.zeros_like(oracle.interior_mean)
    start_errs = np.empty(n_seeds)
    end_errs = np.empty(n_seeds)
    for seed in range(n_seeds):
        x0, _ = sample(
            SamplerConfig(
                kind=config.kind, steps=config.steps, guidance=config.guidance, seed=seed
            ),
            model,
            cond,
        )
        total += x0[1:-1]
        start_errs[seed] = np.linalg.norm(x0[0] - cond.c_start)
        end_errs[seed] = np.linalg.norm(x0[-1] - cond.c_end)

    emp_mean = total / n_seeds
    std = oracle.marginal_std()
    tol = 5.0 * (5.0 / np.sqrt(n_seeds)) * std  # 5x the 5-sigma sample-error bound
    deviation = np.abs(emp_mean - oracle.interior_mean)
    mean_ok = bool(np.all(deviation <= tol))

    scale = max(np.linalg.norm(cond.c_start), np.linalg.norm(cond.c_end), 1.0)
    endpoint_tol = ENDPOINT_MEDIAN_TOL_FACTOR * scale
    start_median = float(np.median(start_errs))
    end_median = float(np.median(end_errs))
    endpoint_ok = start_median <= endpoint_tol and end_median <= endpoint_tol

    _report(
        5,
        "Gaussian bridge oracle",
        mean_ok and endpoint_ok,
        f"max |mean dev|/std {float((deviation / std).max()):.3f} (tol 0.25), "
        f"endpoint medians {start_median:.2e}/{end_median:.2e} (tol {endpoint_tol:.2e})",
    )


def test_criterion_6_offmanifold_comparison():
    base = {
        "model": {"kind": "subspace", "frames": 9, "dims": 8, "rank": 2, "basis_seed": 3},
        "conditioning": {"mode": "sample", "seed": 11},
        "run": {"num_seeds": 200, "base_seed": 0},
    }
    fusion_cfg = json.loads(json.dumps(base))
    fusion_cfg["sampler"] = {"kind": "fusion", "steps": 25, "lambda": 0.5}
    bidi_cfg = json.loads(json.dumps(base))
    bidi_cfg["sampler"] = {"kind": "bidi", "steps": 25}
    with pytest.warns(RuntimeWarning, match="singular"):
        result = compare(fusion_cfg, bidi_cfg)
    stats = result["metrics"]["offmanifold"]
    p_value = stats["sign_test"]["p_greater"]
    ok = stats["median_a"] > stats["median_b"] and p_value < 0.01
    _report(
        6,
        "off-manifold comparison",
        ok,
        f"median fusion {stats['median_a']:.4f} vs bidi {stats['median_b']:.2e}, "
        f"sign-test p {p_value:.2e} over 200 paired seeds",
    )


def test_criterion_7_identical_bounds_mode():
    n_seeds = 300
    model = GaussianVideoModel.ar1(np.zeros((9, 2)), 1.0, 0.9)
    frame = model.sample(np.random.default_rng(5))[0]
    cond = Conditioning(frame, frame.copy())

    interiors = np.empty((n_seeds, 7, 2))
    start_errs = np.empty(n_seeds)
    end_errs = np.empty(n_seeds)
    for seed in range(n_seeds):
        x0, _ = sample(
            SamplerConfig(kind=SamplerKind.VIBID_FULL, steps=25, seed=seed), model, cond
        )
        interiors[seed] = x0[1:-1]
        start_errs[seed] = np.linalg.norm(x0[0] - cond.c_start)
        end_errs[seed] = np.linalg.norm(x0[-1] - cond.c_end)

    scale = max(np.linalg.norm(frame), 1.0)
    endpoint_tol = ENDPOINT_MEDIAN_TOL_FACTOR * scale
    endpoint_ok = float(np.median(start_errs)) <= endpoint_tol
    endpoint_ok &= float(np.median(end_errs)) <= endpoint_tol
    min_var = float(interiors.var(axis=0).min())
    alive_ok = min_var > 1e-4
    _report(
        7,
        "identical-bounds mode",
        endpoint_ok and alive_ok,
        f"endpoint medians {np.median(start_errs):.2e}/{np.median(end_errs):.2e}, "
        f"min interior variance across seeds {min_var:.4f}",
    )


def test_criterion_8_cfgpp_scale_sweep_regression():
    baseline = json.loads((DATA_DIR / "cfgpp_scale_baseline.json").read_text())
    sweep = ablate_cfgpp_scale(baseline["base_config"], baseline["scales"])
    ordering = [
        row["scale"]
        for row in sorted(sweep["table"], key=lambda r: r["median_endpoint_end_err"])
    ]
    table_ok = [row["scale"] for row in sweep["table"]] == baseline["scales"]
    ordering_ok = ordering == baseline["endpoint_end_err_ordering"]
    _report(
        8,
        "CFG++ scale sweep",
        table_ok and ordering_ok,
        f"endpoint-error ordering {ordering} matches archived baseline",
    )


def test_criterion_9_determinism(tmp_path):
    cfg = {
        "model": AR1_MODEL_CFG,
        "conditioning": {"mode": "sample", "seed": 3},
        "sampler": {"kind": "vibid", "steps": 25},
        "run": {"num_seeds": 5, "base_seed": 21, "dump_frames": True},
    }
    cfg_a = json.loads(json.dumps(cfg))
    cfg_a["run"]["out_dir"] = str(tmp_path / "a")
    cfg_b = json.loads(json.dumps(cfg))
    cfg_b["run"]["out_dir"] = str(tmp_path / "b")
    run(cfg_a)
    run(cfg_b)

    report_a = (tmp_path / "a" / "report.json").read_bytes()
    report_b = (tmp_path / "b" / "report.json").read_bytes()
    # out_dir is the only permitted difference between the two canonical reports
    text_a = report_a.decode().replace(str(tmp_path / "a"), "OUT")
    text_b = report_b.decode().replace(str(tmp_path / "b"), "OUT")
    reports_ok = text_a == text_b

    dumps_ok = all(
        (tmp_path / "a" / f"frames_seed{s}.vbds").read_bytes()
        == (tmp_path / "b" / f"frames_seed{s}.vbds").read_bytes()
        for s in range(21, 26)
    )
    rerun = run(cfg_a)
    rerun_ok = canonical_json(rerun.to_dict()).encode() == report_a
    _report(
        9,
        "determinism",
        reports_ok and dumps_ok and rerun_ok,
        "byte-identical canonical reports and frame dumps across repeated runs",
    )
