#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-numpy fallback.

Times the individual hot kernels and full sampling runs under each
available backend, then prints a speedup table.

    python benchmarks/bench_backends.py [--runs N] [--steps T] [--json PATH]
"""

import argparse
import json
import time

import numpy as np

from framebridge import _kernels
from framebridge.denoiser import GaussianVideoModel
from framebridge.latent import Conditioning
from framebridge.sampler import SamplerConfig, SamplerKind, sample


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(inner=2000, repeats=5):
    rng = np.random.default_rng(0)
    f, d = 9, 2
    a, b, c = (rng.standard_normal((f, d)) for _ in range(3))
    frame = rng.standard_normal(d)
    evecs = np.linalg.qr(rng.standard_normal((f, f)))[0].copy()
    w_f = rng.uniform(0.1, 1.0, f)
    basis = np.linalg.qr(rng.standard_normal((f * d, 2)))[0].copy()
    w_r = rng.uniform(0.1, 1.0, 2)

    cases = {
        "euler_step": lambda: _kernels.euler_step(a, b, 0.4),
        "cfgpp_euler_step": lambda: _kernels.cfgpp_euler_step(a, b, c, 0.4),
        "cfg_combine": lambda: _kernels.cfg_combine(a, b, 1.0),
        "lerp": lambda: _kernels.lerp(a, b, 0.5),
        "add_scaled": lambda: _kernels.add_scaled(a, 0.7, b),
        "flip": lambda: _kernels.flip(a),
        "set_last_frame": lambda: _kernels.set_last_frame(a, frame),
        "temporal_shrink_apply": lambda: _kernels.temporal_shrink_apply(evecs, w_f, a, b),
        "lowrank_shrink_apply": lambda: _kernels.lowrank_shrink_apply(basis, w_r, a, b),
    }

    results = {}
    for name, fn in cases.items():
        def loop(fn=fn):
            for _ in range(inner):
                fn()

        results[name] = _time(loop, repeats) / inner
    return results


def bench_sampler(runs=200, steps=25, repeats=3):
    model = GaussianVideoModel.ar1(np.zeros((9, 2)), 1.0, 0.9)
    truth = model.sample(np.random.default_rng(7))
    cond = Conditioning(truth[0], truth[-1])

    def loop():
        for seed in range(runs):
            sample(
                SamplerConfig(kind=SamplerKind.VIBID_FULL, steps=steps, seed=seed), model, cond
            )

    return _time(loop, repeats) / runs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=200, help="sampler runs per timing")
    parser.add_argument("--steps", type=int, default=25)
    parser.add_argument("--json", metavar="PATH", help="also write raw numbers as JSON")
    args = parser.parse_args()

    backends = _kernels.available_backends()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension for a comparison")

    # interleave backends across repeats so clock drift hits both equally
    kernel_times = {b: {} for b in backends}
    sampler_times = {b: float("inf") for b in backends}
    for _ in range(3):
        for backend in backends:
            _kernels.use_backend(backend)
            for name, t in bench_kernels(repeats=2).items():
                prev = kernel_times[backend].get(name, float("inf"))
                kernel_times[backend][name] = min(prev, t)
            sampler_times[backend] = min(
                sampler_times[backend], bench_sampler(runs=args.runs, steps=args.steps, repeats=1)
            )

    names = sorted(next(iter(kernel_times.values())))
    print(f"{'kernel':<24}" + "".join(f"{b + ' (us)':>16}" for b in backends) + f"{'speedup':>10}")
    for name in names:
        row = f"{name:<24}"
        for backend in backends:
            row += f"{kernel_times[backend][name] * 1e6:>16.2f}"
        if len(backends) == 2:
            ratio = kernel_times["python"][name] / kernel_times["compiled"][name]
            row += f"{ratio:>9.1f}x"
        print(row)

    print()
    print(f"{'full vibid run':<24}" + "".join(f"{b + ' (ms)':>16}" for b in backends), end="")
    if len(backends) == 2:
        print(f"{sampler_times['python'] / sampler_times['compiled']:>9.1f}x")
    else:
        print()
    row = f"{'(' + str(args.steps) + ' steps)':<24}"
    for backend in backends:
        row += f"{sampler_times[backend] * 1e3:>16.3f}"
    print(row)

    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"kernels": kernel_times, "sampler_run": sampler_times}, fh, indent=2)
        print(f"\nraw numbers written to {args.json}")


if __name__ == "__main__":
    main()
