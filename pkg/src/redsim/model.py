"""TCP/RED fluid model: drop law, window/queue dynamics, controller.

The state is (w, q, q_avg): congestion window, instantaneous queue length
and its exponentially weighted moving average. The window equation couples
to the window one round-trip in the past, which is what turns the system
into a delay differential equation; the drop probability p is produced by
a discrete controller sampled on a fixed grid and held constant in
between.
"""

from __future__ import annotations

import math
from bisect import bisect_right

from .params import RedParams, SimState

_INF = math.inf


def drop_probability(q_avg: float, params: RedParams) -> float:
    """Early-drop probability for an averaged queue length.

    Zero below the lower threshold, linear ramp up to ``p_max`` between the
    thresholds, and a hard 1.0 above the upper threshold.
    """
    if q_avg < params.q_min * params.R:
        return 0.0
    if q_avg > params.q_max * params.R:
        return 1.0
    return params.p_max * (q_avg / params.R - params.q_min) / (params.q_max - params.q_min)


def window_growth_term(w: float, params: RedParams) -> float:
    """Additive window growth 1/T, gated to zero at the window cap."""
    if params.use_heaviside_cap and w >= params.w_max:
        return 0.0
    return 1.0 / params.T


def queue_rate(q: float, w: float, p: float, params: RedParams) -> float:
    """Queue length rate of change with saturation guards.

    The raw balance is arrivals minus service; the guards stop the queue
    from being pushed past its capacity or below empty within one step.
    """
    if params.use_drop_factor_in_queue:
        a = (1.0 - p) * params.N * w / params.T - params.C
    else:
        a = params.N * w / params.T - params.C
    q2 = q + a
    if q2 > params.R:
        return params.R - q
    if q2 > 0.0:
        return a
    return -q


class RedController:
    """Sampled drop-probability controller with zero-order hold.

    ``p`` is updated only at sample instants; ``p_history`` records the
    (time, p) update steps so the delayed-drop variant can look up
    p(t - T). The history list is shared with the SimState snapshots the
    controller is invoked on.
    """

    def __init__(self, params: RedParams, initial_p: float = 0.0):
        self.params = params
        self.p = initial_p
        self.initial_p = initial_p
        self.p_history: list[tuple[float, float]] = []

    def delayed_p(self, t: float) -> float:
        """Controller output in effect at time ``t`` (piecewise constant)."""
        i = bisect_right(self.p_history, (t, _INF))
        if i == 0:
            return self.initial_p
        return self.p_history[i - 1][1]

    def affect(self, state: SimState) -> float:
        new_p = controller_affect(state, self.params)
        self.p = new_p
        return new_p


def controller_affect(state: SimState, params: RedParams) -> float:
    """Recompute p from the averaged queue length at a sample instant."""
    new_p = drop_probability(state.q_avg, params)
    if params.delayed_drop:
        state.p_history.append((state.t, new_p))
    return new_p


def build_rhs(params: RedParams, controller: RedController | None):
    """Right-hand side closure for the DDE driver.

    The returned function has the signature ``rhs(t, y, past)`` where
    ``past(t_query, component)`` reads the solution history. With no
    controller the drop probability is pinned at zero.
    """
    T = params.T
    delayed = params.delayed_drop

    def rhs(t, y, past):
        w, q, q_avg = y
        w_del = past(t - T, 0)
        if controller is None:
            p_now = 0.0
            p_used = 0.0
        else:
            p_now = controller.p
            p_used = controller.delayed_p(t - T) if delayed else p_now
        dw = window_growth_term(w, params) - w * w_del * p_used / (2.0 * T)
        dq = queue_rate(q, w, p_now, params)
        dq_avg = params.w_q * params.C * (q - q_avg)
        return (dw, dq, dq_avg)

    return rhs


def make_prehistory(params: RedParams, y0):
    """Pre-initial history function selected by ``prehistory_mode``."""
    if params.prehistory_mode == "hold_initial":
        held = tuple(map(float, y0))
        return lambda t: held
    zero = (0.0,) * len(y0)
    return lambda t: zero
