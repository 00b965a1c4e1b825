"""Top-level simulation entry point with backend dispatch.

``simulate`` assembles the hybrid problem (model right-hand side, clamps,
sampled controller, mandatory stop grid) and runs it either through the
generic pure-Python DDE driver or through the compiled fast path. Both
produce identical trajectories; the compiled core exists because the
stepping loop is the hot spot for long runs and parameter sweeps.
"""

from __future__ import annotations

import math

import numpy as np

from . import tableau
from ._backend import HAVE_COMPILED, resolve_backend
from .dde import (
    DdeProblem,
    Trajectory,
    _merge_stops,
    propagate_discontinuities,
    solve_dde,
)
from .events import ClampSpec, EventHooks, SampledCallback, make_event
from .model import RedController, build_rhs, make_prehistory
from .params import INITIAL_STATE, PROFILES, STATE_NAMES, RedParams
from .solver import DenseSegment, SolverConfig

if HAVE_COMPILED:
    from . import _speedups


def sample_grid(tf: float, dt: float, t0: float = 0.0) -> tuple[float, ...]:
    """Controller sample times t0 + i*dt covering [t0, tf]."""
    if not dt > 0.0:
        raise ValueError(f"sample dt must be positive, got {dt}")
    n = int(math.floor((tf - t0) / dt + 1e-9))
    return tuple(t0 + i * dt for i in range(n + 1))


def clamp_specs(params: RedParams) -> tuple[ClampSpec, ...]:
    """State projections enforced after every accepted step."""
    specs = [
        ClampSpec(0, lower=1.0, upper=params.w_max),
        ClampSpec(1, lower=0.0, upper=params.R),
    ]
    if params.clamp_q_avg:
        specs.append(ClampSpec(2, lower=0.0, upper=params.R))
    return tuple(specs)


def make_config(
    tf: float,
    sample_dt: float = 0.01,
    abs_tol: float = 1e-8,
    rel_tol: float = 1e-6,
    t0: float = 0.0,
) -> SolverConfig:
    return SolverConfig(
        abs_tol=abs_tol,
        rel_tol=rel_tol,
        tstops=sample_grid(tf, sample_dt, t0),
    )


def simulate(
    params: RedParams | None = None,
    tf: float = 30.0,
    sample_dt: float = 0.01,
    abs_tol: float = 1e-8,
    rel_tol: float = 1e-6,
    controller_enabled: bool = True,
    y0=INITIAL_STATE,
    backend: str = "auto",
) -> Trajectory:
    """Run the RED/TCP hybrid model from t = 0 to ``tf``."""
    if params is None:
        params = PROFILES["julia"]
    which = resolve_backend(backend)
    config = make_config(tf, sample_dt, abs_tol, rel_tol)
    if which == "compiled":
        return _simulate_compiled(params, tf, config, controller_enabled, y0)
    return _simulate_python(params, tf, config, controller_enabled, y0)


def _simulate_python(params, tf, config, controller_enabled, y0):
    controller = RedController(params) if controller_enabled else None
    sampled = None
    if controller is not None:
        sampled = SampledCallback.on_grid(config.tstops, controller.affect)
    hooks = EventHooks(
        clamps=clamp_specs(params),
        sampled=sampled,
        component_names=STATE_NAMES,
        p_history=controller.p_history if controller else None,
    )
    problem = DdeProblem(
        rhs=build_rhs(params, controller),
        y0=tuple(y0),
        t_span=(0.0, tf),
        lags=(params.T,),
        prehistory=make_prehistory(params, y0),
    )
    traj = solve_dde(problem, config, hooks, component_names=STATE_NAMES)
    return traj


def _simulate_compiled(params, tf, config, controller_enabled, y0):
    t0 = 0.0
    discs = propagate_discontinuities(t0, (params.T,), tableau.ORDER, tf)
    stops = _merge_stops(config.tstops, discs, t0, tf)
    stop_times = np.array([s for s, _ in stops], dtype=np.float64)
    stop_sample = np.array([1 if f else 0 for _, f in stops], dtype=np.uint8)

    specs = clamp_specs(params)
    lo = np.full(3, -np.inf)
    hi = np.full(3, np.inf)
    lo_on = np.zeros(3, dtype=np.uint8)
    hi_on = np.zeros(3, dtype=np.uint8)
    for spec in specs:
        if spec.lower is not None:
            lo[spec.component] = spec.lower
            lo_on[spec.component] = 1
        if spec.upper is not None:
            hi[spec.component] = spec.upper
            hi_on[spec.component] = 1

    w0, q0, qa0 = (float(v) for v in y0)
    fire_at_t0 = 1 if (controller_enabled and t0 in set(config.tstops)) else 0

    res = _speedups.simulate_red(
        t0,
        tf,
        w0,
        q0,
        qa0,
        stop_times,
        stop_sample,
        params.T,
        params.N,
        params.C,
        params.w_q,
        params.q_min,
        params.q_max,
        params.R,
        params.p_max,
        params.w_max,
        1 if params.use_drop_factor_in_queue else 0,
        1 if params.delayed_drop else 0,
        1 if params.use_heaviside_cap else 0,
        1 if params.prehistory_mode == "hold_initial" else 0,
        lo,
        hi,
        lo_on,
        hi_on,
        1 if controller_enabled else 0,
        fire_at_t0,
        config.abs_tol,
        config.rel_tol,
        config.h_init,
        config.h_max,
        config.h_min,
        config.safety_factor,
    )

    times = res["t"]
    states = res["states"]
    p_arr = res["p"]
    t_list = times.tolist()
    start_list = states.tolist()
    raw_list = res["raw_ends"].tolist()
    coeff_list = res["coeffs"].tolist()
    segments = []
    for i in range(len(t_list) - 1):
        segments.append(
            DenseSegment(
                t_list[i],
                t_list[i + 1],
                tuple(start_list[i]),
                tuple(raw_list[i]),
                tuple(tuple(row) for row in coeff_list[i]),
            )
        )
    names = STATE_NAMES + ("p",)
    events = [
        make_event(
            float(res["ev_t"][i]),
            int(res["ev_code"][i]),
            names[int(res["ev_comp"][i])],
            float(res["ev_old"][i]),
            float(res["ev_new"][i]),
        )
        for i in range(len(res["ev_t"]))
    ]
    return Trajectory(
        t=times,
        states=states,
        p=p_arr,
        events=events,
        segments=segments,
        component_names=STATE_NAMES,
    )
