"""Solution history for delayed-state lookups.

A :class:`HistoryBuffer` stitches together the pre-initial history function
(defined for t <= t0) with the dense segments produced by the integrator.
The convention at shared times: the prehistory applies strictly below t0;
at t0 and at interior segment boundaries the later segment wins, which
makes the buffer right-continuous across state resets applied by event
hooks.
"""

from __future__ import annotations

from bisect import bisect_right
from typing import Callable, Sequence

from .solver import DenseSegment


class CausalityError(RuntimeError):
    """A lookup reached beyond the computed frontier."""


class HistoryBuffer:
    """Prehistory function plus completed dense segments.

    ``y0`` covers the corner case of a lookup at exactly t0 before the
    first segment exists (possible when a stage lands on t0 + lag with a
    step equal to the lag).
    """

    def __init__(
        self,
        prehistory: Callable[[float], Sequence[float]],
        t0: float,
        y0: Sequence[float] | None = None,
    ):
        self.prehistory = prehistory
        self.t0 = t0
        self.y0 = None if y0 is None else tuple(map(float, y0))
        self.segments: list[DenseSegment] = []
        self._starts: list[float] = []

    @property
    def frontier(self) -> float:
        return self.segments[-1].t_end if self.segments else self.t0

    def append(self, seg: DenseSegment) -> None:
        front = self.frontier
        if seg.t_start != front:
            raise ValueError(
                f"segment starts at {seg.t_start!r}, frontier is {front!r}"
            )
        self.segments.append(seg)
        self._starts.append(seg.t_start)

    def eval(self, t: float) -> tuple[float, ...]:
        if t < self.t0:
            return tuple(map(float, self.prehistory(t)))
        if not self.segments:
            if t == self.t0 and self.y0 is not None:
                return self.y0
            if t == self.t0:
                return tuple(map(float, self.prehistory(t)))
            raise CausalityError(
                f"lookup at t={t!r} beyond frontier {self.frontier!r}"
            )
        if t > self.frontier:
            raise CausalityError(
                f"lookup at t={t!r} beyond frontier {self.frontier!r}"
            )
        idx = bisect_right(self._starts, t) - 1
        return self.segments[idx].eval(t)

    def eval_component(self, t: float, component: int) -> float:
        return self.eval(t)[component]


def history_eval(buf: HistoryBuffer, t: float, component: int) -> float:
    """State component at a past time (prehistory or dense segment)."""
    return buf.eval_component(t, component)


def append_segment(buf: HistoryBuffer, seg: DenseSegment) -> HistoryBuffer:
    """Append ``seg`` at the frontier; rejects gaps and overlaps."""
    buf.append(seg)
    return buf
