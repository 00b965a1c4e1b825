"""Command-line front end.

Subcommands:

* ``run``      - one simulation: trajectory CSV, events log, oscillation
                 report, optional uniform-grid resample.
* ``sweep``    - repeat a run across a linear sweep of one parameter.
* ``droplaw``  - evaluate the drop-probability law at given queue averages.
* ``selftest`` - run the built-in solver and model oracles.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._backend import available_backends
from .analysis import oscillation_metrics
from .csvio import (
    format_float,
    write_events_csv,
    write_report_json,
    write_samples_csv,
    write_trajectory_csv,
)
from .dde import DdeProblem, Trajectory, solve_dde
from .model import drop_probability
from .params import DEFAULT_PROFILE, PROFILES, STATE_NAMES, RedParams, parse_override
from .simulate import simulate
from .solver import SolverConfig, SolverFailure, advance_with_tstops

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Fully resolved run settings: profile + overrides + solver knobs.

    Precedence, lowest to highest: profile defaults, configuration file,
    repeated ``--set`` overrides, dedicated command-line flags.
    """

    params: RedParams = field(default_factory=lambda: PROFILES[DEFAULT_PROFILE])
    tf: float = 30.0
    sample_dt: float = 0.01
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    out: Path = Path("trajectory.csv")
    resample_dt: float | None = None
    controller_enabled: bool = True
    backend: str = "auto"
    sweep: tuple[str, float, float, int] | None = None

    def __post_init__(self):
        if not self.tf > 0.0:
            raise ConfigError(f"tf must be positive, got {self.tf}")
        if not self.sample_dt > 0.0:
            raise ConfigError(f"sample_dt must be positive, got {self.sample_dt}")
        if self.sweep is not None and self.sweep[3] < 2:
            raise ConfigError(f"sweep count must be >= 2, got {self.sweep[3]}")


def resample(trajectory: Trajectory, dt: float):
    """Evaluate the dense output on a uniform grid {t0, t0+dt, ...}.

    Returns (times, states, p) arrays; p is the zero-order-hold controller
    output in effect at each grid time.
    """
    if not dt > 0.0:
        raise ValueError(f"resample dt must be positive, got {dt}")
    t0, tf = trajectory.t0, trajectory.tf
    n = int(math.floor((tf - t0) / dt + 1e-9))
    times = [t0 + i * dt for i in range(n + 1)]
    states = np.array([trajectory.eval(t) for t in times])
    p = np.array([trajectory.p_at(t) for t in times])
    return np.array(times), states, p


def _load_config_file(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


_RUN_KEYS = {"profile", "tf", "sample_dt", "abs_tol", "rel_tol", "out"}


def _build_params(args) -> RedParams:
    profile = args.profile
    overrides: dict = {}
    run_settings: dict[str, str] = {}
    if getattr(args, "config", None):
        for key, value in _load_config_file(args.config).items():
            if key == "profile":
                profile = value
            elif key in _RUN_KEYS:
                run_settings[key] = value
            else:
                try:
                    overrides[key] = parse_override(key, value)
                except (KeyError, ValueError) as exc:
                    raise ConfigError(f"config key {key!r}: {exc}") from exc
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        try:
            overrides[key] = parse_override(key, value)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"--set {key!r}: {exc}") from exc
    if profile not in PROFILES and profile != "custom":
        raise ConfigError(
            f"unknown profile {profile!r} (choose from "
            f"{sorted(PROFILES)} or 'custom')"
        )
    base = PROFILES.get(profile, RedParams())
    try:
        params = base.with_overrides(**overrides)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    # Run-level file settings only apply where the flag kept its default.
    for key, value in run_settings.items():
        if getattr(args, key, None) is None:
            try:
                setattr(args, key, str(value) if key == "out" else float(value))
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    return params


def _resolve_config(args) -> RunConfig:
    params = _build_params(args)  # may fold file-level run settings into args
    sweep = _parse_sweep(args.sweep) if getattr(args, "sweep", None) else None
    return RunConfig(
        params=params,
        tf=30.0 if args.tf is None else args.tf,
        sample_dt=0.01 if args.sample_dt is None else args.sample_dt,
        abs_tol=1e-8 if args.abs_tol is None else args.abs_tol,
        rel_tol=1e-6 if args.rel_tol is None else args.rel_tol,
        out=Path("trajectory.csv") if args.out is None else Path(args.out),
        resample_dt=args.resample_dt,
        controller_enabled=not args.no_controller,
        backend=args.backend,
        sweep=sweep,
    )


def _run_one(config: RunConfig, params: RedParams, out_path: Path) -> dict:
    traj = simulate(
        params,
        tf=config.tf,
        sample_dt=config.sample_dt,
        abs_tol=config.abs_tol,
        rel_tol=config.rel_tol,
        controller_enabled=config.controller_enabled,
        backend=config.backend,
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out_path, traj)
    events_path = out_path.with_suffix(out_path.suffix + ".events")
    write_events_csv(events_path, traj.events)
    window = (config.tf / 2.0, config.tf)
    reports = [oscillation_metrics(traj, name, window) for name in STATE_NAMES]
    report_path = out_path.with_suffix(out_path.suffix + ".report.json")
    write_report_json(report_path, reports)
    outputs = {
        "trajectory": str(out_path),
        "events": str(events_path),
        "report": str(report_path),
        "sustained": {rep.component: rep.sustained for rep in reports},
        "n_samples": int(len(traj.t)),
        "n_events": len(traj.events),
    }
    if config.resample_dt is not None:
        times, states, p = resample(traj, config.resample_dt)
        uniform_path = out_path.with_suffix(out_path.suffix + ".uniform")
        write_samples_csv(uniform_path, times, states, p)
        outputs["uniform"] = str(uniform_path)
    return outputs


def _cmd_run(args) -> int:
    config = _resolve_config(args)
    result = _run_one(config, config.params, config.out)
    print(f"wrote {result['trajectory']} ({result['n_samples']} samples)")
    print(f"wrote {result['events']} ({result['n_events']} events)")
    print(f"wrote {result['report']}")
    if "uniform" in result:
        print(f"wrote {result['uniform']}")
    for name, verdict in result["sustained"].items():
        print(f"sustained[{name}] = {verdict}")
    return EXIT_OK


def _parse_sweep(spec: str):
    parts = spec.split(":")
    if len(parts) != 4:
        raise ConfigError(f"--sweep expects param:start:stop:count, got {spec!r}")
    name = parts[0].strip()
    try:
        start, stop = float(parts[1]), float(parts[2])
        count = int(parts[3])
    except ValueError as exc:
        raise ConfigError(f"bad sweep spec {spec!r}: {exc}") from exc
    if count < 2:
        raise ConfigError(f"sweep count must be >= 2, got {count}")
    return name, start, stop, count


def _cmd_sweep(args) -> int:
    config = _resolve_config(args)
    name, start, stop, count = config.sweep
    out_dir = Path("sweep_out") if args.out is None else Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = []
    for i in range(count):
        value = start + i * (stop - start) / (count - 1)
        try:
            point_params = config.params.with_overrides(**{name: value})
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"sweep point {name}={value!r}: {exc}") from exc
        point_dir = out_dir / f"point_{i:03d}"
        result = _run_one(config, point_params, point_dir / "trajectory.csv")
        result["param"] = name
        result["value"] = value
        index.append(result)
        print(f"point {i:03d}: {name}={format_float(value)} done")

    index_path = out_dir / "index.json"
    with open(index_path, "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {index_path}")
    return EXIT_OK


def _cmd_droplaw(args) -> int:
    params = _build_params(args)
    print("q_avg,p")
    for value in args.q_avg:
        print(f"{format_float(value)},{format_float(drop_probability(value, params))}")
    return EXIT_OK


def _selftest_checks():
    """Solver and model oracles with analytically known answers."""
    checks = []

    config = SolverConfig(rel_tol=1e-9, abs_tol=1e-12)
    segs = advance_with_tstops(lambda t, y: (-y[0],), 0.0, (1.0,), 1.0, config)
    err = abs(segs[-1].y_end[0] - math.exp(-1.0))
    checks.append(("exponential-decay y(1)=e^-1", err, 1e-8))

    problem = DdeProblem(
        rhs=lambda t, y, past: (-past(t - 1.0, 0),),
        y0=(1.0,),
        t_span=(0.0, 3.0),
        lags=(1.0,),
        prehistory=lambda t: (1.0,),
    )
    traj = solve_dde(problem, SolverConfig())
    for t_check, exact in ((1.0, 0.0), (2.0, -0.5), (3.0, -1.0 / 6.0)):
        value = traj.eval(t_check)[0]
        checks.append((f"delayed-decay y({t_check:g})", abs(value - exact), 1e-6))

    params = PROFILES["julia"]
    rate = params.w_q * params.C
    segs = advance_with_tstops(
        lambda t, y: (rate * (100.0 - y[0]),),
        0.0,
        (0.0,),
        5.0,
        SolverConfig(),
    )
    expected = 100.0 * (1.0 - math.exp(-5.0))
    checks.append(("ewma-step q_hat(5)", abs(segs[-1].y_end[0] - expected), 1e-4))

    table = ((0.0, 0.0), (75.0, 0.0), (112.5, 0.05), (150.0, 0.1), (200.0, 1.0))
    worst = max(abs(drop_probability(q, params) - p) for q, p in table)
    checks.append(("drop-law table", worst, 1e-12))
    return checks


def _cmd_selftest(args) -> int:
    failures = 0
    for name, err, tol in _selftest_checks():
        ok = err <= tol
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}: err={err:.3e} (tol {tol:.0e})")
        failures += 0 if ok else 1
    return EXIT_OK if failures == 0 else 1


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--profile",
        default=DEFAULT_PROFILE,
        help="parameter profile: julia, modelica or custom",
    )
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override a model parameter (repeatable)",
    )
    parser.add_argument("--config", help="flat key = value configuration file")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tf", type=float, default=None, help="simulation end time, s")
    parser.add_argument(
        "--sample-dt",
        dest="sample_dt",
        type=float,
        default=None,
        help="controller sample interval, s",
    )
    parser.add_argument("--abs-tol", dest="abs_tol", type=float, default=None)
    parser.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
    parser.add_argument("--out", default=None, help="output path")
    parser.add_argument(
        "--resample-dt",
        dest="resample_dt",
        type=float,
        default=None,
        help="also write a uniform-grid CSV at this spacing",
    )
    parser.add_argument(
        "--no-controller",
        action="store_true",
        help="pin the drop probability at zero",
    )
    parser.add_argument(
        "--backend",
        default="auto",
        choices=("auto",) + tuple(available_backends()),
        help="integration backend",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redsim",
        description="TCP/RED fluid-model simulator (delayed dynamics with a "
        "sampled drop controller)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation")
    _add_common(p_run)
    _add_run_options(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter")
    _add_common(p_sweep)
    _add_run_options(p_sweep)
    p_sweep.add_argument(
        "--sweep",
        required=True,
        metavar="PARAM:START:STOP:COUNT",
        help="linear sweep specification",
    )
    p_sweep.set_defaults(func=_cmd_sweep)

    p_drop = sub.add_parser("droplaw", help="evaluate the drop law")
    _add_common(p_drop)
    p_drop.add_argument("q_avg", nargs="+", type=float)
    p_drop.set_defaults(func=_cmd_droplaw)

    p_self = sub.add_parser("selftest", help="run built-in oracles")
    p_self.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(
            f"error: solver failed ({exc}); last good time t={exc.t_last!r}",
            file=sys.stderr,
        )
        return EXIT_SOLVER


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
