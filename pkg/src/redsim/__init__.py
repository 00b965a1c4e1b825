"""redsim: hybrid continuous-discrete simulator of TCP traffic under RED.

A congestion-window / router-queue fluid model with one round-trip delay
is integrated by an adaptive Dormand-Prince 5(4) method of steps; a
discrete drop-probability controller samples the averaged queue length on
a fixed grid, and post-step clamps keep the state inside its physical
bounds. Analysis helpers certify the self-oscillating regime the model is
known for.
"""

from ._backend import HAVE_COMPILED, available_backends, resolve_backend
from .analysis import OscillationReport, Peak, find_peaks, oscillation_metrics
from .dde import DdeProblem, Trajectory, propagate_discontinuities, solve_dde
from .events import ClampSpec, EventHooks, SampledCallback, apply_clamps
from .history import CausalityError, HistoryBuffer, history_eval
from .model import (
    RedController,
    build_rhs,
    controller_affect,
    drop_probability,
    queue_rate,
    window_growth_term,
)
from .params import INITIAL_STATE, PROFILES, RedParams, SimState
from .simulate import simulate
from .solver import (
    DenseSegment,
    SolverConfig,
    SolverFailure,
    StepOutcome,
    advance_with_tstops,
    dense_eval,
    rk_step,
)

__version__ = "0.1.0"

__all__ = [
    "CausalityError",
    "ClampSpec",
    "DdeProblem",
    "DenseSegment",
    "EventHooks",
    "HAVE_COMPILED",
    "HistoryBuffer",
    "INITIAL_STATE",
    "OscillationReport",
    "PROFILES",
    "Peak",
    "RedController",
    "RedParams",
    "SampledCallback",
    "SimState",
    "SolverConfig",
    "SolverFailure",
    "StepOutcome",
    "Trajectory",
    "advance_with_tstops",
    "apply_clamps",
    "available_backends",
    "build_rhs",
    "controller_affect",
    "dense_eval",
    "drop_probability",
    "find_peaks",
    "history_eval",
    "oscillation_metrics",
    "propagate_discontinuities",
    "queue_rate",
    "resolve_backend",
    "rk_step",
    "simulate",
    "solve_dde",
    "window_growth_term",
    "__version__",
]
