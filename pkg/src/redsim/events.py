"""Hybrid-event layer: post-step state clamps and sampled callbacks.

Clamps project individual state components back into their bounds after
every accepted step (discrete reinit semantics, no root-finding). The
sampled callback is the discrete controller: it runs only when the
integrator lands exactly on one of its sample times. Per boundary the
clamps run first so the controller reads feasible state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .params import SimState

KIND_CLAMP_LOWER = "clamp_lower"
KIND_CLAMP_UPPER = "clamp_upper"
KIND_CONTROL = "control"

_KIND_BY_CODE = (KIND_CLAMP_LOWER, KIND_CLAMP_UPPER, KIND_CONTROL)


class Event(NamedTuple):
    t: float
    kind: str
    component: str
    detail: str


def make_event(t, code, component_name, old, new) -> Event:
    """Build an event record; both backends format through this helper."""
    return Event(t, _KIND_BY_CODE[code], component_name, f"{old!r}->{new!r}")


@dataclass(frozen=True)
class ClampSpec:
    """Bounds for one state component; either bound may be absent."""

    component: int
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.lower is not None and self.upper is not None:
            if not self.lower < self.upper:
                raise ValueError(
                    f"need lower < upper, got {self.lower}, {self.upper}"
                )


def apply_clamps(y: Sequence[float], clamps: Sequence[ClampSpec]):
    """Project state into bounds. Returns (state, fired).

    ``fired`` lists (component, code, old, new) for every clamp that
    actually changed a value; in-bounds components are left untouched, so
    the projection is idempotent.
    """
    out = list(y)
    fired = []
    for spec in clamps:
        v = out[spec.component]
        if spec.lower is not None and v < spec.lower:
            out[spec.component] = spec.lower
            fired.append((spec.component, 0, v, spec.lower))
        elif spec.upper is not None and v > spec.upper:
            out[spec.component] = spec.upper
            fired.append((spec.component, 1, v, spec.upper))
    return tuple(out), fired


@dataclass(frozen=True)
class SampledCallback:
    """Discrete controller bound to a fixed sample grid.

    ``affect`` maps the current SimState to the new controller output; it
    runs exactly once per sample instant.
    """

    sample_times: frozenset[float]
    affect: Callable[[SimState], float]

    @staticmethod
    def on_grid(times, affect) -> "SampledCallback":
        return SampledCallback(frozenset(float(t) for t in times), affect)


def run_sampled_callback(t: float, state: SimState, cb: SampledCallback) -> float:
    """Run the callback at a sample instant; returns the new output."""
    if t not in cb.sample_times:
        raise ValueError(f"t={t!r} is not a sample time")
    return cb.affect(state)


class EventHooks:
    """Per-boundary hook bundle wired into the DDE driver.

    Applies clamps, then (on flagged stops) the sampled callback, collects
    raw event records, and tracks the controller output so the driver can
    attach a p value to every trajectory sample. Control events are
    recorded only when p actually changes.
    """

    def __init__(
        self,
        clamps: Sequence[ClampSpec] = (),
        sampled: SampledCallback | None = None,
        component_names: Sequence[str] = (),
        p_history: list[tuple[float, float]] | None = None,
        initial_p: float = 0.0,
    ):
        self.clamps = tuple(clamps)
        self.sampled = sampled
        self.component_names = tuple(component_names)
        self.p = initial_p
        self.p_history = [] if p_history is None else p_history
        self.raw_events: list[tuple] = []  # (t, code, component, old, new)

    def _name(self, component: int) -> str:
        if component < len(self.component_names):
            return self.component_names[component]
        return f"y{component}"

    def at_boundary(self, t: float, y: tuple, is_sample: bool):
        """Returns (y, p, changed); ``changed`` invalidates the FSAL stage."""
        y, fired = apply_clamps(y, self.clamps)
        for component, code, old, new in fired:
            self.raw_events.append((t, code, component, old, new))
        changed = bool(fired)
        if is_sample and self.sampled is not None:
            state = SimState(
                t=t, w=y[0], q=y[1], q_avg=y[2], p=self.p,
                p_history=self.p_history,
            )
            new_p = run_sampled_callback(t, state, self.sampled)
            if new_p != self.p:
                self.raw_events.append((t, 2, 3, self.p, new_p))
                self.p = new_p
                changed = True
        return y, self.p, changed

    def events(self) -> list[Event]:
        names = self.component_names + ("p",)
        return [
            make_event(t, code, names[comp] if comp < len(names) else f"y{comp}", old, new)
            for t, code, comp, old, new in self.raw_events
        ]
