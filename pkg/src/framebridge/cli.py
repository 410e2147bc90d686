"""Command-line interface.

Subcommands: run, compare, ablate, oracle. Flags override config-file
values; with no config file the defaults plus flags fully specify an
experiment. Exit codes: 0 success, 2 config error, 3 runtime/numerical
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, FrameBridgeError
from .harness import ablate_cfgpp_scale, compare, oracle_stats, run
from .reports import canonical_json, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top-level JSON value must be an object")
    return cfg


def _set(cfg: dict, block: str, key: str, value):
    if value is not None:
        cfg.setdefault(block, {})[key] = value


def _apply_overrides(cfg: dict, args) -> dict:
    _set(cfg, "model", "kind", args.model)
    _set(cfg, "model", "frames", args.frames)
    _set(cfg, "model", "dims", args.dims)
    _set(cfg, "sampler", "kind", args.sampler)
    _set(cfg, "sampler", "steps", args.steps)
    _set(cfg, "sampler", "lambda", args.lam)
    _set(cfg, "sampler", "sigma_min", args.sigma_min)
    _set(cfg, "sampler", "sigma_max", args.sigma_max)
    _set(cfg, "sampler", "rho", args.rho)
    _set(cfg, "run", "base_seed", args.seed)
    _set(cfg, "run", "num_seeds", args.seeds)
    _set(cfg, "run", "workers", args.workers)
    if args.out is not None:
        _set(cfg, "run", "out_dir", args.out)
    if args.dump_frames:
        _set(cfg, "run", "dump_frames", True)
    if args.cfg_mode is not None or args.cfg_scale is not None or args.dds_iters is not None:
        cfg.setdefault("guidance", {})
        _set(cfg, "guidance", "mode", args.cfg_mode)
        _set(cfg, "guidance", "scale", args.cfg_scale)
        if args.dds_iters is not None:
            cfg["guidance"]["dds_iters"] = args.dds_iters
            cfg["guidance"]["dds_enabled"] = args.dds_iters > 0
    return cfg


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="JSON experiment config")
    p.add_argument("--seed", type=int, metavar="N", help="base seed")
    p.add_argument("--seeds", type=int, metavar="N", help="number of seeds")
    p.add_argument("--sampler", choices=("euler", "fusion", "bidi", "vibid"))
    p.add_argument("--steps", type=int, metavar="N")
    p.add_argument("--sigma-min", type=float, metavar="S")
    p.add_argument("--sigma-max", type=float, metavar="S")
    p.add_argument("--rho", type=float, metavar="R")
    p.add_argument("--frames", type=int, metavar="N")
    p.add_argument("--dims", type=int, metavar="N")
    p.add_argument("--cfg-mode", choices=("cfg", "cfgpp"))
    p.add_argument("--cfg-scale", type=float, metavar="W")
    p.add_argument("--dds-iters", type=int, metavar="L")
    p.add_argument("--lambda", dest="lam", type=float, metavar="X", help="fusion ratio")
    p.add_argument("--model", choices=("point", "gauss", "ar1", "subspace", "gmm"))
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--dump-frames", action="store_true")
    p.add_argument("--workers", type=int, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framebridge",
        description="Keyframe-interpolation diffusion sampling experiments on analytic models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a seeded experiment and report metrics")
    _add_common_flags(p_run)

    p_cmp = sub.add_parser("compare", help="paired comparison of two configs")
    _add_common_flags(p_cmp)
    p_cmp.add_argument("--config-b", metavar="PATH", required=True, help="second config")

    p_abl = sub.add_parser("ablate", help="CFG++ guidance-scale sweep")
    _add_common_flags(p_abl)
    p_abl.add_argument(
        "--scales",
        default="0.6,0.8,1.0",
        metavar="LIST",
        help="comma-separated CFG++ scales (default: 0.6,0.8,1.0)",
    )

    p_orc = sub.add_parser("oracle", help="print analytic bridge statistics")
    _add_common_flags(p_orc)
    return parser


def _print_run_summary(report):
    print(f"seeds: {len(report.per_seed)}  nfe_total: {report.nfe_total}")
    for name, stats in sorted(report.aggregate.items()):
        print(f"  {name:>20s}  median={stats['median']:.6g}  iqr={stats['iqr']:.6g}")
    if report.bridge is not None:
        print(
            f"  bridge divergence: mean_err={report.bridge['mean_err']:.6g}"
            f"  cov_err={report.bridge['cov_err']:.6g}"
        )


def _cmd_run(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    report = run(cfg)
    _print_run_summary(report)
    if report.config["run"]["out_dir"]:
        print(f"report written to {Path(report.config['run']['out_dir']) / 'report.json'}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg_a = _apply_overrides(_load_config(args.config), args)
    cfg_b = _load_config(args.config_b)
    result = compare(cfg_a, cfg_b)
    for name, stats in sorted(result["metrics"].items()):
        sign = stats["sign_test"]
        print(
            f"  {name:>20s}  median_delta={stats['median_delta']:+.6g}"
            f"  a>b:{sign['pos']} a<b:{sign['neg']} ties:{sign['ties']}"
            f"  p(a>b)={sign['p_greater']:.3g} p(a<b)={sign['p_less']:.3g}"
        )
    if args.out:
        write_json(Path(args.out) / "comparison.json", result)
        print(f"comparison written to {Path(args.out) / 'comparison.json'}")
    return EXIT_OK


def _cmd_ablate(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    try:
        scales = [float(s) for s in args.scales.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError("scales", f"malformed scale list {args.scales!r}") from exc
    result = ablate_cfgpp_scale(cfg, scales)
    header = sorted({k for row in result["table"] for k in row} - {"scale"})
    header = ["scale"] + header
    print(",".join(header))
    for row in result["table"]:
        print(",".join(repr(row[k]) if isinstance(row.get(k), float) else str(row.get(k, "")) for k in header))
    if args.out:
        write_json(Path(args.out) / "ablation.json", result)
        print(f"sweep written to {Path(args.out) / 'ablation.json'}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    stats = oracle_stats(cfg)
    print(canonical_json(stats), end="")
    if args.out:
        write_json(Path(args.out) / "oracle.json", stats)
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "compare": _cmd_compare,
    "ablate": _cmd_ablate,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FrameBridgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
