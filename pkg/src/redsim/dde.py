"""Method-of-steps driver for constant-lag delay differential equations.

The step size is capped at the smallest lag, so every delayed-state lookup
falls at or behind the history frontier and the explicit stepper never has
to iterate. Derivative discontinuities radiating from the start time
(t0 + k*lag) are inserted as mandatory stops, as are the sample times of
the discrete callback, so the hybrid events always fire at exact times.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tableau
from .events import Event, EventHooks
from .history import HistoryBuffer
from .solver import DenseSegment, SolverConfig, _advance

# Near-coincident mandatory stops are merged to avoid degenerate steps.
_STOP_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class DdeProblem:
    """A constant-lag DDE with pre-initial history.

    ``rhs(t, y, past)`` must evaluate the derivative using
    ``past(t_query, component)`` for delayed state access.
    """

    rhs: Callable
    y0: tuple[float, ...]
    t_span: tuple[float, float]
    lags: tuple[float, ...]
    prehistory: Callable[[float], Sequence[float]]

    def __post_init__(self):
        object.__setattr__(self, "y0", tuple(map(float, self.y0)))
        object.__setattr__(self, "lags", tuple(map(float, self.lags)))
        t0, tf = self.t_span
        if not t0 < tf:
            raise ValueError(f"need t0 < tf, got {self.t_span}")
        if not self.lags:
            raise ValueError("at least one lag is required")
        if any(not lag > 0.0 for lag in self.lags):
            raise ValueError(f"lags must be positive, got {self.lags}")


@dataclass
class Trajectory:
    """Sampled solution plus event annotations and dense segments.

    One sample per accepted step boundary (every mandatory stop included);
    ``p`` is the controller output in effect from that sample time onward.
    """

    t: np.ndarray
    states: np.ndarray
    p: np.ndarray
    events: list[Event] = field(default_factory=list)
    segments: list[DenseSegment] = field(default_factory=list)
    component_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.component_names:
            self.component_names = tuple(
                f"y{i}" for i in range(self.states.shape[1])
            )

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def tf(self) -> float:
        return float(self.t[-1])

    def component_index(self, component) -> int:
        if isinstance(component, str):
            return self.component_names.index(component)
        return int(component)

    def component(self, component) -> np.ndarray:
        return self.states[:, self.component_index(component)]

    def eval(self, t: float) -> tuple[float, ...]:
        """Dense-output state at any time in the span (right-continuous)."""
        if t < self.t0 or t > self.tf:
            raise ValueError(f"t={t!r} outside [{self.t0!r}, {self.tf!r}]")
        starts = self._segment_starts
        idx = bisect_right(starts, t) - 1
        if idx < 0:
            idx = 0
        return self.segments[idx].eval(t)

    def p_at(self, t: float) -> float:
        """Controller output in effect at time ``t`` (zero-order hold)."""
        if t < self.t0 or t > self.tf:
            raise ValueError(f"t={t!r} outside [{self.t0!r}, {self.tf!r}]")
        idx = int(np.searchsorted(self.t, t, side="right")) - 1
        if idx < 0:
            idx = 0
        return float(self.p[idx])

    @property
    def _segment_starts(self):
        cached = getattr(self, "_starts_cache", None)
        if cached is None or len(cached) != len(self.segments):
            cached = [seg.t_start for seg in self.segments]
            self._starts_cache = cached
        return cached


def propagate_discontinuities(
    t0: float, lags: Sequence[float], order: int, tf: float
) -> tuple[float, ...]:
    """Times t0 + k*lag (k = 1..order+1) within the span, merged and sorted.

    The derivative jump at t0 propagates along every lag; after order+1
    lag intervals the solution is smooth enough for the stepper.
    """
    points = set()
    for lag in lags:
        if not lag > 0.0:
            raise ValueError(f"lags must be positive, got {lag}")
        for k in range(1, order + 2):
            t = t0 + k * lag
            if t <= tf:
                points.add(t)
    return tuple(sorted(points))


def _merge_stops(sample_times, disc_times, t0, tf):
    """Mandatory stop list [(t, is_sample)] on (t0, tf], ending at tf."""
    flagged: dict[float, bool] = {}
    for s in sample_times:
        if t0 < s <= tf:
            flagged[s] = True
    flagged.setdefault(tf, False)
    kept = sorted(flagged)
    for d in disc_times:
        if not t0 < d <= tf:
            continue
        if d in flagged:
            continue
        pos = bisect_right(kept, d)
        near_prev = pos > 0 and d - kept[pos - 1] <= _STOP_MERGE_TOL
        near_next = pos < len(kept) and kept[pos] - d <= _STOP_MERGE_TOL
        if near_prev or near_next:
            continue
        flagged[d] = False
        kept.insert(pos, d)
    return [(s, flagged[s]) for s in kept]


def solve_dde(
    problem: DdeProblem,
    config: SolverConfig,
    hooks: EventHooks | None = None,
    component_names: Sequence[str] = (),
) -> Trajectory:
    """Integrate the DDE by the method of steps.

    Event hooks run after every accepted step (clamps first, then the
    sampled callback when the boundary is one of its sample times,
    including the start time). The trajectory records every step boundary.
    """
    t0, tf = problem.t_span
    for s in config.tstops:
        if s < t0 or s > tf:
            raise ValueError(f"tstop {s!r} outside span [{t0!r}, {tf!r}]")

    min_lag = min(problem.lags)
    discs = propagate_discontinuities(t0, problem.lags, tableau.ORDER, tf)
    stops = _merge_stops(config.tstops, discs, t0, tf)

    sample_set = hooks.sampled.sample_times if hooks and hooks.sampled else frozenset()
    buffer = HistoryBuffer(problem.prehistory, t0, y0=problem.y0)

    def past(t_query: float, component: int) -> float:
        return buffer.eval(t_query)[component]

    user_rhs = problem.rhs

    def stage_rhs(t, y):
        return user_rhs(t, y, past)

    y0 = problem.y0
    p_values = [0.0]
    if hooks is not None:
        y0, p0, _ = hooks.at_boundary(t0, y0, t0 in sample_set)
        p_values[0] = p0

        def boundary_hook(t, y, flagged):
            y, p, changed = hooks.at_boundary(t, y, flagged)
            p_values.append(p)
            return y, changed

    else:
        def boundary_hook(t, y, flagged):
            p_values.append(0.0)
            return y, False

    segments, points = _advance(
        stage_rhs,
        t0,
        y0,
        tf,
        config,
        stops,
        h_cap=min_lag,
        boundary_hook=boundary_hook,
        segment_sink=buffer.append,
    )

    times = np.array([pt[0] for pt in points], dtype=float)
    states = np.array([pt[1] for pt in points], dtype=float)
    p_arr = np.array(p_values, dtype=float)
    return Trajectory(
        t=times,
        states=states,
        p=p_arr,
        events=hooks.events() if hooks is not None else [],
        segments=segments,
        component_names=tuple(component_names),
    )
