"""Adaptive embedded Runge-Kutta integration with per-step dense output.

The stepper is the Dormand-Prince 5(4) pair (see :mod:`redsim.tableau`)
with the standard mixed-tolerance error norm and the usual
``safety * (1/err)^(1/5)`` step-size controller. Every accepted step also
stores a quartic interpolant (:class:`DenseSegment`) so the solution can be
evaluated anywhere inside the step; that is what makes the delayed-state
lookups of the DDE driver possible.

State vectors are plain tuples of floats. Stage combinations are written as
explicit accumulation loops in a fixed order: the compiled fast path
replays exactly the same sequence of IEEE operations, so both backends
produce bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from . import tableau

# Step-size controller limits (same conventions as scipy's RK drivers).
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


class SolverFailure(RuntimeError):
    """Integration could not continue; ``t_last`` is the last good time."""

    def __init__(self, message: str, t_last: float):
        super().__init__(message)
        self.t_last = t_last


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, step bounds and mandatory stop points.

    ``tstops`` are times the integrator lands on exactly (the step is
    shrunk to hit them; they are never faked by interpolation). ``h_min``
    only limits error-controlled steps: a shorter step taken to land on a
    stop is always allowed.
    """

    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    h_init: float = 1e-4
    h_max: float = math.inf
    h_min: float = 1e-12
    tstops: tuple[float, ...] = ()
    safety_factor: float = 0.9

    def __post_init__(self):
        if not self.abs_tol > 0.0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0.0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not (self.h_min <= self.h_init <= self.h_max):
            raise ValueError(
                f"need h_min <= h_init <= h_max, got "
                f"{self.h_min}, {self.h_init}, {self.h_max}"
            )
        stops = tuple(float(s) for s in self.tstops)
        if any(b <= a for a, b in zip(stops, stops[1:])):
            raise ValueError("tstops must be strictly increasing")
        object.__setattr__(self, "tstops", stops)


@dataclass(frozen=True)
class StepOutcome:
    """Result of a single candidate step."""

    accepted: bool
    t_new: float
    y_new: tuple[float, ...]
    error_estimate: float
    h_next: float


class DenseSegment:
    """Quartic interpolant over one accepted step.

    ``eval`` returns the stored endpoint states bitwise at ``t_start`` and
    ``t_end``; in between it evaluates the dense-output polynomial.
    """

    __slots__ = ("t_start", "t_end", "y_start", "y_end", "coeffs")

    def __init__(self, t_start, t_end, y_start, y_end, coeffs):
        if not t_start < t_end:
            raise ValueError(f"need t_start < t_end, got {t_start}, {t_end}")
        self.t_start = t_start
        self.t_end = t_end
        self.y_start = y_start
        self.y_end = y_end
        self.coeffs = coeffs  # per component: weights of theta^1..theta^4

    def eval(self, t: float) -> tuple[float, ...]:
        if t == self.t_start:
            return self.y_start
        if t == self.t_end:
            return self.y_end
        h = self.t_end - self.t_start
        th = (t - self.t_start) / h
        y = self.y_start
        return tuple(
            y[i] + h * th * (c[0] + th * (c[1] + th * (c[2] + th * c[3])))
            for i, c in enumerate(self.coeffs)
        )

    def __repr__(self):
        return f"DenseSegment({self.t_start!r}, {self.t_end!r})"


def dense_eval(seg: DenseSegment, t: float) -> tuple[float, ...]:
    """Evaluate a segment's interpolant, rejecting out-of-range times."""
    if t < seg.t_start or t > seg.t_end:
        raise ValueError(
            f"t={t!r} outside segment [{seg.t_start!r}, {seg.t_end!r}]"
        )
    return seg.eval(t)


def _run_stages(rhs, t, y, h, f0, t_new):
    """Evaluate the seven DP stages. Returns (y_new, k)."""
    n = len(y)
    k = [f0]
    for s in range(1, 6):
        a = tableau.A[s]
        ys = []
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += a[j] * k[j][i]
            ys.append(y[i] + h * acc)
        k.append(tuple(map(float, rhs(t + tableau.C[s] * h, tuple(ys)))))
    b = tableau.B
    y_new = []
    for i in range(n):
        acc = 0.0
        for j in range(6):
            acc += b[j] * k[j][i]
        y_new.append(y[i] + h * acc)
    y_new = tuple(y_new)
    k.append(tuple(map(float, rhs(t_new, y_new))))  # FSAL stage
    return y_new, k


def _error_norm(k, y, y_new, h, abs_tol, rel_tol):
    """RMS of the component-wise mixed-tolerance weighted error."""
    e = tableau.E
    n = len(y)
    acc = 0.0
    for i in range(n):
        err_i = 0.0
        for j in range(7):
            err_i += e[j] * k[j][i]
        err_i *= h
        ay = abs(y[i])
        an = abs(y_new[i])
        scale = abs_tol + rel_tol * (ay if ay > an else an)
        r = err_i / scale
        acc += r * r
    err = math.sqrt(acc / n)
    if not math.isfinite(err):
        return math.inf
    return err


def _dense_coeffs(k, n):
    p = tableau.P
    rows = []
    for i in range(n):
        row = []
        for c in range(4):
            acc = 0.0
            for j in range(7):
                acc += p[j][c] * k[j][i]
            row.append(acc)
        rows.append(tuple(row))
    return tuple(rows)


def _accept_factor(err, safety, had_rejection):
    if err == 0.0:
        factor = MAX_FACTOR
    else:
        factor = safety * (1.0 / err) ** 0.2
        if factor > MAX_FACTOR:
            factor = MAX_FACTOR
        elif factor < MIN_FACTOR:
            factor = MIN_FACTOR
    if had_rejection and factor > 1.0:
        factor = 1.0
    return factor


def _reject_factor(err, safety):
    if not math.isfinite(err):
        return MIN_FACTOR
    factor = safety * (1.0 / err) ** 0.2
    if factor < MIN_FACTOR:
        factor = MIN_FACTOR
    elif factor > 1.0:
        factor = 1.0
    return factor


def rk_step(
    rhs: Callable[[float, tuple], Sequence[float]],
    t: float,
    y: Sequence[float],
    h: float,
    config: SolverConfig = SolverConfig(),
    f0: Sequence[float] | None = None,
) -> StepOutcome:
    """Attempt a single step of size ``h`` from ``(t, y)``.

    Returns the candidate state at ``t + h``, the weighted error estimate
    and the step size the controller proposes next. ``accepted`` is True
    when the error passes the mixed tolerance test (non-finite right-hand
    sides reject the step).
    """
    if not h > 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    y = tuple(map(float, y))
    if f0 is None:
        f0 = tuple(map(float, rhs(t, y)))
    else:
        f0 = tuple(map(float, f0))
    t_new = t + h
    y_new, k = _run_stages(rhs, t, y, h, f0, t_new)
    err = _error_norm(k, y, y_new, h, config.abs_tol, config.rel_tol)
    accepted = err <= 1.0
    if accepted:
        factor = _accept_factor(err, config.safety_factor, False)
    else:
        factor = _reject_factor(err, config.safety_factor)
    h_next = h * factor
    if h_next > config.h_max:
        h_next = config.h_max
    if h_next < config.h_min:
        h_next = config.h_min
    return StepOutcome(accepted, t_new, y_new, err, h_next)


def _build_stops(tstops, t0, t_final):
    """Stop list for the driver: (time, is_tstop), ending at t_final."""
    for s in tstops:
        if s < t0 or s > t_final:
            raise ValueError(f"tstop {s!r} outside span [{t0!r}, {t_final!r}]")
    stops = [(s, True) for s in tstops if t0 < s < t_final]
    stops.append((t_final, t_final in tstops))
    return stops


def _advance(
    rhs,
    t0,
    y0,
    t_final,
    config,
    stops,
    h_cap=None,
    boundary_hook=None,
    segment_sink=None,
):
    """Drive the stepper from t0 to t_final, landing exactly on every stop.

    ``stops`` is a list of (time, flag) strictly increasing on (t0, t_final]
    whose last entry is t_final. ``boundary_hook(t, y, flagged)`` runs after
    every accepted step and may replace the state; it returns
    ``(y, changed)``, where ``changed`` forces re-evaluation of the FSAL
    derivative. Returns (segments, points) with ``points`` the
    post-hook boundary states, starting at (t0, y0).
    """
    y = tuple(map(float, y0))
    n = len(y)
    f0 = tuple(map(float, rhs(t0, y)))
    if any(not math.isfinite(v) for v in f0):
        raise SolverFailure(f"non-finite derivative at t={t0!r}", t0)

    hmax = config.h_max if h_cap is None else min(config.h_max, h_cap)
    if hmax < config.h_min:
        raise SolverFailure(
            f"step cap {hmax!r} below h_min {config.h_min!r}", t0
        )
    h = config.h_init
    if h > hmax:
        h = hmax

    segments = []
    points = [(t0, y)]
    t = t0
    stop_idx = 0
    had_rejection = False
    while t < t_final:
        target, flagged = stops[stop_idx]
        gap = target - t
        if h >= gap:
            h_eff = gap
            t_new = target
            landing = True
        else:
            h_eff = h
            t_new = t + h
            landing = False

        y_new, k = _run_stages(rhs, t, y, h_eff, f0, t_new)
        err = _error_norm(k, y, y_new, h_eff, config.abs_tol, config.rel_tol)
        if not err <= 1.0:
            h_new = h_eff * _reject_factor(err, config.safety_factor)
            if h_new < config.h_min:
                raise SolverFailure(
                    f"step size underflow at t={t!r} (error {err:.3g})", t
                )
            h = h_new
            had_rejection = True
            continue

        seg = DenseSegment(t, t_new, y, y_new, _dense_coeffs(k, n))
        segments.append(seg)
        if segment_sink is not None:
            segment_sink(seg)

        t = t_new
        changed = False
        if boundary_hook is not None:
            y, changed = boundary_hook(t, y_new, landing and flagged)
        else:
            y = y_new
        points.append((t, y))
        if landing:
            stop_idx += 1

        factor = _accept_factor(err, config.safety_factor, had_rejection)
        had_rejection = False
        h = h_eff * factor
        if h > hmax:
            h = hmax
        if h < config.h_min:
            h = config.h_min
        if changed:
            f0 = tuple(map(float, rhs(t, y)))
            if any(not math.isfinite(v) for v in f0):
                raise SolverFailure(f"non-finite derivative at t={t!r}", t)
        else:
            f0 = k[6]
    return segments, points


def advance_with_tstops(
    rhs: Callable[[float, tuple], Sequence[float]],
    t0: float,
    y0: Sequence[float],
    t_final: float,
    config: SolverConfig,
) -> list[DenseSegment]:
    """Integrate ``y' = rhs(t, y)`` over [t0, t_final].

    Returns contiguous dense segments covering the span; every configured
    tstop coincides exactly with a segment boundary.
    """
    if not t0 < t_final:
        raise ValueError(f"need t0 < t_final, got {t0}, {t_final}")
    stops = _build_stops(config.tstops, t0, t_final)
    segments, _ = _advance(rhs, t0, y0, t_final, config, stops)
    return segments
