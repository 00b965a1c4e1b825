#!/usr/bin/env python3
"""Benchmark the pure-Python engine against the compiled core.

Runs the standard 30-second simulation for both parameter profiles on each
available backend, reports wall times and checks that the backends agree
bit-for-bit. The "core only" row times the raw extension call without the
trajectory-object assembly that the public API performs.

Usage: python benchmarks/benchmark_backends.py [--repeat N]
"""

import argparse
import statistics
import time

import numpy as np

from redsim import tableau
from redsim._backend import HAVE_COMPILED
from redsim.dde import _merge_stops, propagate_discontinuities
from redsim.params import PROFILES
from redsim.simulate import clamp_specs, make_config, simulate


def time_call(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def time_raw_core(params, tf, repeat):
    from redsim import _speedups

    config = make_config(tf)
    discs = propagate_discontinuities(0.0, (params.T,), tableau.ORDER, tf)
    stops = _merge_stops(config.tstops, discs, 0.0, tf)
    stop_times = np.array([s for s, _ in stops])
    stop_sample = np.array([1 if f else 0 for _, f in stops], dtype=np.uint8)
    lo = np.full(3, -np.inf)
    hi = np.full(3, np.inf)
    lo_on = np.zeros(3, dtype=np.uint8)
    hi_on = np.zeros(3, dtype=np.uint8)
    for spec in clamp_specs(params):
        if spec.lower is not None:
            lo[spec.component] = spec.lower
            lo_on[spec.component] = 1
        if spec.upper is not None:
            hi[spec.component] = spec.upper
            hi_on[spec.component] = 1

    def call():
        _speedups.simulate_red(
            0.0, tf, 1.0, 0.0, 0.0, stop_times, stop_sample,
            params.T, params.N, params.C, params.w_q, params.q_min,
            params.q_max, params.R, params.p_max, params.w_max,
            0, 0, 1, 0, lo, hi, lo_on, hi_on, 1, 1,
            config.abs_tol, config.rel_tol, config.h_init, config.h_max,
            config.h_min, config.safety_factor,
        )

    return time_call(call, repeat)


def check_agreement(params, tf):
    a = simulate(params, tf=tf, backend="python")
    b = simulate(params, tf=tf, backend="compiled")
    same = (
        a.t.tolist() == b.t.tolist()
        and a.states.tolist() == b.states.tolist()
        and a.p.tolist() == b.p.tolist()
        and a.events == b.events
    )
    return same, len(a.t)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--tf", type=float, default=30.0)
    args = parser.parse_args()

    print(f"{'case':<28} {'backend':<10} {'best':>10} {'median':>10}")
    print("-" * 62)
    for name in ("julia", "modelica"):
        params = PROFILES[name]
        baselines = {}
        for backend in ("python", "compiled") if HAVE_COMPILED else ("python",):
            best, med = time_call(
                lambda: simulate(params, tf=args.tf, backend=backend),
                args.repeat,
            )
            baselines[backend] = best
            print(
                f"{name + ' tf=' + str(args.tf):<28} {backend:<10} "
                f"{best * 1000:>8.1f}ms {med * 1000:>8.1f}ms"
            )
        if HAVE_COMPILED:
            best, med = time_raw_core(params, args.tf, args.repeat)
            print(
                f"{name + ' tf=' + str(args.tf):<28} {'core only':<10} "
                f"{best * 1000:>8.1f}ms {med * 1000:>8.1f}ms"
            )
            speedup = baselines["python"] / baselines["compiled"]
            core_speedup = baselines["python"] / best
            same, n = check_agreement(params, args.tf)
            verdict = "bit-identical" if same else "MISMATCH"
            print(
                f"{'':<28} speedup {speedup:4.1f}x end-to-end, "
                f"{core_speedup:5.1f}x core; {n} samples {verdict}"
            )
    if not HAVE_COMPILED:
        print("compiled backend not built; only the python engine was timed")


if __name__ == "__main__":
    main()
