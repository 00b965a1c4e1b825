# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled hot path: the full hybrid RED simulation loop in C.

This is a transliteration of the pure-Python engine (solver._advance +
dde.solve_dde + model.build_rhs + events.EventHooks) specialized to the
three-component RED state. Every floating-point operation runs in the same
order as the Python code, the tableau constants are copied from
:mod:`redsim.tableau` at import time, and the build avoids value-changing
compiler flags, so the two backends produce bit-identical trajectories.
Keep any change here in lockstep with the Python engine.
"""

from libc.math cimport fabs, isfinite, pow, sqrt

import numpy as np

from . import tableau as _tableau
from .solver import MAX_FACTOR as _PY_MAX_FACTOR
from .solver import MIN_FACTOR as _PY_MIN_FACTOR
from .solver import SolverFailure

cdef double MIN_FACTOR = _PY_MIN_FACTOR
cdef double MAX_FACTOR = _PY_MAX_FACTOR
cdef double INF = float("inf")

# Dormand-Prince coefficients, copied verbatim from the Python module.
cdef double[6][6] A
cdef double[6] C
cdef double[6] B
cdef double[7] E
cdef double[7][4] P


def _load_tableau():
    for s in range(1, 6):
        for j in range(s):
            A[s][j] = _tableau.A[s][j]
    for s in range(6):
        C[s] = _tableau.C[s]
        B[s] = _tableau.B[s]
    for j in range(7):
        E[j] = _tableau.E[j]
        for col in range(4):
            P[j][col] = _tableau.P[j][col]


_load_tableau()


cdef struct Params:
    double T
    double N
    double C_rate
    double w_q
    double q_min
    double q_max
    double R
    double p_max
    double w_max
    bint use_drop_factor
    bint delayed_drop
    bint heaviside_cap
    bint prehist_hold


cdef double _drop_probability(double q_avg, Params* pr) noexcept nogil:
    if q_avg < pr.q_min * pr.R:
        return 0.0
    if q_avg > pr.q_max * pr.R:
        return 1.0
    return pr.p_max * (q_avg / pr.R - pr.q_min) / (pr.q_max - pr.q_min)


cdef double _queue_rate(double q, double w, double p, Params* pr) noexcept nogil:
    cdef double a, q2
    if pr.use_drop_factor:
        a = (1.0 - p) * pr.N * w / pr.T - pr.C_rate
    else:
        a = pr.N * w / pr.T - pr.C_rate
    q2 = q + a
    if q2 > pr.R:
        return pr.R - q
    if q2 > 0.0:
        return a
    return -q


cdef double _accept_factor(double err, double safety, bint had_rejection) noexcept nogil:
    cdef double factor
    if err == 0.0:
        factor = MAX_FACTOR
    else:
        factor = safety * pow(1.0 / err, 0.2)
        if factor > MAX_FACTOR:
            factor = MAX_FACTOR
        elif factor < MIN_FACTOR:
            factor = MIN_FACTOR
    if had_rejection and factor > 1.0:
        factor = 1.0
    return factor


cdef double _reject_factor(double err, double safety) noexcept nogil:
    cdef double factor
    if not isfinite(err):
        return MIN_FACTOR
    factor = safety * pow(1.0 / err, 0.2)
    if factor < MIN_FACTOR:
        factor = MIN_FACTOR
    elif factor > 1.0:
        factor = 1.0
    return factor


cdef double _delayed_w(
    double td,
    double t0,
    double w0,
    bint prehist_hold,
    double[::1] bt,
    double[:, ::1] states,
    double[:, ::1] raw_ends,
    double[:, :, ::1] coeffs,
    Py_ssize_t n_seg,
) noexcept nogil:
    """History lookup of the window component (HistoryBuffer.eval)."""
    cdef Py_ssize_t lo, hi, mid, idx
    cdef double ts, te, hseg, th
    if td < t0:
        return w0 if prehist_hold else 0.0
    if n_seg == 0:
        # Only reachable for td == t0; the initial state covers it.
        return w0
    lo = 0
    hi = n_seg
    while lo < hi:
        mid = (lo + hi) // 2
        if bt[mid] <= td:
            lo = mid + 1
        else:
            hi = mid
    idx = lo - 1
    if idx < 0:
        idx = 0
    ts = bt[idx]
    te = bt[idx + 1]
    if td == ts:
        return states[idx, 0]
    if td == te:
        return raw_ends[idx, 0]
    hseg = te - ts
    th = (td - ts) / hseg
    return states[idx, 0] + hseg * th * (
        coeffs[idx, 0, 0]
        + th * (coeffs[idx, 0, 1] + th * (coeffs[idx, 0, 2] + th * coeffs[idx, 0, 3]))
    )


cdef double _delayed_p(
    double td,
    double[::1] ph_t,
    double[::1] ph_v,
    Py_ssize_t n_ph,
    double initial_p,
) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n_ph, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if ph_t[mid] <= td:
            lo = mid + 1
        else:
            hi = mid
    if lo == 0:
        return initial_p
    return ph_v[lo - 1]


cdef void _red_rhs(
    double t,
    double* yv,
    double* out,
    double t0,
    double w0,
    Params* pr,
    double p_now,
    bint controller_on,
    double[::1] bt,
    double[:, ::1] states,
    double[:, ::1] raw_ends,
    double[:, :, ::1] coeffs,
    Py_ssize_t n_seg,
    double[::1] ph_t,
    double[::1] ph_v,
    Py_ssize_t n_ph,
    double initial_p,
) noexcept nogil:
    """Model derivative, expression-for-expression as model.build_rhs."""
    cdef double td = t - pr.T
    cdef double w_del = _delayed_w(
        td, t0, w0, pr.prehist_hold, bt, states, raw_ends, coeffs, n_seg
    )
    cdef double p_used, growth
    if controller_on and pr.delayed_drop:
        p_used = _delayed_p(td, ph_t, ph_v, n_ph, initial_p)
    else:
        p_used = p_now
    if pr.heaviside_cap and yv[0] >= pr.w_max:
        growth = 0.0
    else:
        growth = 1.0 / pr.T
    out[0] = growth - yv[0] * w_del * p_used / (2.0 * pr.T)
    out[1] = _queue_rate(yv[1], yv[0], p_now, pr)
    out[2] = pr.w_q * pr.C_rate * (yv[1] - yv[2])


def simulate_red(
    double t0,
    double tf,
    double w0,
    double q0,
    double qa0,
    double[::1] stop_times,
    unsigned char[::1] stop_sample,
    double T,
    double N,
    double C_rate,
    double w_q,
    double q_min,
    double q_max,
    double R,
    double p_max,
    double w_max,
    int use_drop_factor,
    int delayed_drop,
    int heaviside_cap,
    int prehist_hold,
    double[::1] clamp_lo,
    double[::1] clamp_hi,
    unsigned char[::1] clamp_lo_on,
    unsigned char[::1] clamp_hi_on,
    int controller_on,
    int fire_at_t0,
    double abs_tol,
    double rel_tol,
    double h_init,
    double h_max,
    double h_min,
    double safety,
):
    """Run the hybrid simulation; returns arrays mirroring the Python path."""
    cdef Params pr
    pr.T = T
    pr.N = N
    pr.C_rate = C_rate
    pr.w_q = w_q
    pr.q_min = q_min
    pr.q_max = q_max
    pr.R = R
    pr.p_max = p_max
    pr.w_max = w_max
    pr.use_drop_factor = use_drop_factor
    pr.delayed_drop = delayed_drop
    pr.heaviside_cap = heaviside_cap
    pr.prehist_hold = prehist_hold

    cdef Py_ssize_t n_stops = stop_times.shape[0]
    cdef Py_ssize_t cap = n_stops + 1024
    cdef Py_ssize_t ev_cap = n_stops + 1024
    cdef Py_ssize_t ph_cap = n_stops + 8

    bt_arr = np.empty(cap + 1, dtype=np.float64)
    states_arr = np.empty((cap + 1, 3), dtype=np.float64)
    raw_arr = np.empty((cap, 3), dtype=np.float64)
    coeff_arr = np.empty((cap, 3, 4), dtype=np.float64)
    p_arr = np.empty(cap + 1, dtype=np.float64)
    ev_t_arr = np.empty(ev_cap, dtype=np.float64)
    ev_code_arr = np.empty(ev_cap, dtype=np.int32)
    ev_comp_arr = np.empty(ev_cap, dtype=np.int32)
    ev_old_arr = np.empty(ev_cap, dtype=np.float64)
    ev_new_arr = np.empty(ev_cap, dtype=np.float64)
    ph_t_arr = np.empty(ph_cap, dtype=np.float64)
    ph_v_arr = np.empty(ph_cap, dtype=np.float64)

    cdef double[::1] bt = bt_arr
    cdef double[:, ::1] states = states_arr
    cdef double[:, ::1] raw_ends = raw_arr
    cdef double[:, :, ::1] coeffs = coeff_arr
    cdef double[::1] p_out = p_arr
    cdef double[::1] ev_t = ev_t_arr
    cdef int[::1] ev_code = ev_code_arr
    cdef int[::1] ev_comp = ev_comp_arr
    cdef double[::1] ev_old = ev_old_arr
    cdef double[::1] ev_new = ev_new_arr
    cdef double[::1] ph_t = ph_t_arr
    cdef double[::1] ph_v = ph_v_arr

    cdef Py_ssize_t n_seg = 0
    cdef Py_ssize_t n_ev = 0
    cdef Py_ssize_t n_ph = 0

    cdef double p_cur = 0.0
    cdef double initial_p = 0.0
    cdef double[3] y
    cdef double[3] y_new
    cdef double[3] ys
    cdef double[3] stage_out
    cdef double[7][3] k
    cdef double[3] f0

    cdef double t = t0
    cdef double t_new, h, h_eff, hmax, gap, target
    cdef double acc, err_i, scale, ay, an, err, factor, h_new
    cdef double p_now, old_v, new_p, stage_t
    cdef Py_ssize_t stop_idx = 0
    cdef Py_ssize_t i, j, s, col
    cdef bint had_rejection = False
    cdef bint landing, flagged, changed
    cdef long nfev = 0
    cdef long n_rejected = 0

    y[0] = w0
    y[1] = q0
    y[2] = qa0

    # Boundary hook at t0: clamps, then the sampled controller.
    for i in range(3):
        old_v = y[i]
        if clamp_lo_on[i] and old_v < clamp_lo[i]:
            y[i] = clamp_lo[i]
            ev_t[n_ev] = t0
            ev_code[n_ev] = 0
            ev_comp[n_ev] = <int> i
            ev_old[n_ev] = old_v
            ev_new[n_ev] = clamp_lo[i]
            n_ev += 1
        elif clamp_hi_on[i] and old_v > clamp_hi[i]:
            y[i] = clamp_hi[i]
            ev_t[n_ev] = t0
            ev_code[n_ev] = 1
            ev_comp[n_ev] = <int> i
            ev_old[n_ev] = old_v
            ev_new[n_ev] = clamp_hi[i]
            n_ev += 1
    if controller_on and fire_at_t0:
        new_p = _drop_probability(y[2], &pr)
        if pr.delayed_drop:
            ph_t[n_ph] = t0
            ph_v[n_ph] = new_p
            n_ph += 1
        if new_p != p_cur:
            ev_t[n_ev] = t0
            ev_code[n_ev] = 2
            ev_comp[n_ev] = 3
            ev_old[n_ev] = p_cur
            ev_new[n_ev] = new_p
            n_ev += 1
            p_cur = new_p

    bt[0] = t0
    states[0, 0] = y[0]
    states[0, 1] = y[1]
    states[0, 2] = y[2]
    p_out[0] = p_cur

    hmax = h_max if h_max < T else T
    if hmax < h_min:
        raise SolverFailure(f"step cap {hmax!r} below h_min {h_min!r}", t0)
    h = h_init
    if h > hmax:
        h = hmax

    p_now = p_cur if controller_on else 0.0
    _red_rhs(
        t, &y[0], &f0[0], t0, w0, &pr, p_now, controller_on,
        bt, states, raw_ends, coeffs, n_seg, ph_t, ph_v, n_ph, initial_p,
    )
    nfev += 1
    if not (isfinite(f0[0]) and isfinite(f0[1]) and isfinite(f0[2])):
        raise SolverFailure(f"non-finite derivative at t={t0!r}", t0)

    while t < tf:
        target = stop_times[stop_idx]
        flagged = stop_sample[stop_idx] != 0
        p_now = p_cur if controller_on else 0.0
        gap = target - t
        if h >= gap:
            h_eff = gap
            t_new = target
            landing = True
        else:
            h_eff = h
            t_new = t + h
            landing = False

        # Stages (k1 = FSAL carry-over, k7 at the exact step end).
        for i in range(3):
            k[0][i] = f0[i]
        for s in range(1, 6):
            for i in range(3):
                acc = 0.0
                for j in range(s):
                    acc += A[s][j] * k[j][i]
                ys[i] = y[i] + h_eff * acc
            stage_t = t + C[s] * h_eff
            _red_rhs(
                stage_t, &ys[0], &stage_out[0], t0, w0, &pr, p_now,
                controller_on, bt, states, raw_ends, coeffs, n_seg,
                ph_t, ph_v, n_ph, initial_p,
            )
            nfev += 1
            for i in range(3):
                k[s][i] = stage_out[i]
        for i in range(3):
            acc = 0.0
            for j in range(6):
                acc += B[j] * k[j][i]
            y_new[i] = y[i] + h_eff * acc
        _red_rhs(
            t_new, &y_new[0], &stage_out[0], t0, w0, &pr, p_now,
            controller_on, bt, states, raw_ends, coeffs, n_seg,
            ph_t, ph_v, n_ph, initial_p,
        )
        nfev += 1
        for i in range(3):
            k[6][i] = stage_out[i]

        # Mixed-tolerance RMS error norm.
        acc = 0.0
        for i in range(3):
            err_i = 0.0
            for j in range(7):
                err_i += E[j] * k[j][i]
            err_i *= h_eff
            ay = fabs(y[i])
            an = fabs(y_new[i])
            scale = abs_tol + rel_tol * (ay if ay > an else an)
            err_i = err_i / scale
            acc += err_i * err_i
        err = sqrt(acc / 3)
        if not isfinite(err):
            err = INF

        if not err <= 1.0:
            h_new = h_eff * _reject_factor(err, safety)
            if h_new < h_min:
                raise SolverFailure(
                    f"step size underflow at t={t!r} (error {err:.3g})", t
                )
            h = h_new
            had_rejection = True
            n_rejected += 1
            continue

        # Accept: store the dense segment.
        if n_seg == cap:
            cap = cap * 2
            bt_arr = np.concatenate([bt_arr, np.empty_like(bt_arr)])
            states_arr = np.concatenate([states_arr, np.empty_like(states_arr)])
            raw_arr = np.concatenate([raw_arr, np.empty_like(raw_arr)])
            coeff_arr = np.concatenate([coeff_arr, np.empty_like(coeff_arr)])
            p_arr = np.concatenate([p_arr, np.empty_like(p_arr)])
            bt = bt_arr
            states = states_arr
            raw_ends = raw_arr
            coeffs = coeff_arr
            p_out = p_arr
        for i in range(3):
            for col in range(4):
                acc = 0.0
                for j in range(7):
                    acc += P[j][col] * k[j][i]
                coeffs[n_seg, i, col] = acc
            raw_ends[n_seg, i] = y_new[i]
        n_seg += 1
        bt[n_seg] = t_new
        t = t_new

        # Boundary hook: clamps first, then the sampled controller.
        if n_ev + 4 > ev_cap:
            ev_cap = ev_cap * 2
            ev_t_arr = np.concatenate([ev_t_arr, np.empty_like(ev_t_arr)])
            ev_code_arr = np.concatenate([ev_code_arr, np.empty_like(ev_code_arr)])
            ev_comp_arr = np.concatenate([ev_comp_arr, np.empty_like(ev_comp_arr)])
            ev_old_arr = np.concatenate([ev_old_arr, np.empty_like(ev_old_arr)])
            ev_new_arr = np.concatenate([ev_new_arr, np.empty_like(ev_new_arr)])
            ev_t = ev_t_arr
            ev_code = ev_code_arr
            ev_comp = ev_comp_arr
            ev_old = ev_old_arr
            ev_new = ev_new_arr
        if n_ph + 1 > ph_cap:
            ph_cap = ph_cap * 2
            ph_t_arr = np.concatenate([ph_t_arr, np.empty_like(ph_t_arr)])
            ph_v_arr = np.concatenate([ph_v_arr, np.empty_like(ph_v_arr)])
            ph_t = ph_t_arr
            ph_v = ph_v_arr
        changed = False
        for i in range(3):
            old_v = y_new[i]
            if clamp_lo_on[i] and old_v < clamp_lo[i]:
                y_new[i] = clamp_lo[i]
                ev_t[n_ev] = t
                ev_code[n_ev] = 0
                ev_comp[n_ev] = <int> i
                ev_old[n_ev] = old_v
                ev_new[n_ev] = clamp_lo[i]
                n_ev += 1
                changed = True
            elif clamp_hi_on[i] and old_v > clamp_hi[i]:
                y_new[i] = clamp_hi[i]
                ev_t[n_ev] = t
                ev_code[n_ev] = 1
                ev_comp[n_ev] = <int> i
                ev_old[n_ev] = old_v
                ev_new[n_ev] = clamp_hi[i]
                n_ev += 1
                changed = True
        if landing and flagged and controller_on:
            new_p = _drop_probability(y_new[2], &pr)
            if pr.delayed_drop:
                ph_t[n_ph] = t
                ph_v[n_ph] = new_p
                n_ph += 1
            if new_p != p_cur:
                ev_t[n_ev] = t
                ev_code[n_ev] = 2
                ev_comp[n_ev] = 3
                ev_old[n_ev] = p_cur
                ev_new[n_ev] = new_p
                n_ev += 1
                p_cur = new_p
                changed = True

        for i in range(3):
            y[i] = y_new[i]
        states[n_seg, 0] = y[0]
        states[n_seg, 1] = y[1]
        states[n_seg, 2] = y[2]
        p_out[n_seg] = p_cur
        if landing:
            stop_idx += 1

        factor = _accept_factor(err, safety, had_rejection)
        had_rejection = False
        h = h_eff * factor
        if h > hmax:
            h = hmax
        if h < h_min:
            h = h_min

        if changed:
            p_now = p_cur if controller_on else 0.0
            _red_rhs(
                t, &y[0], &f0[0], t0, w0, &pr, p_now, controller_on,
                bt, states, raw_ends, coeffs, n_seg, ph_t, ph_v, n_ph,
                initial_p,
            )
            nfev += 1
            if not (isfinite(f0[0]) and isfinite(f0[1]) and isfinite(f0[2])):
                raise SolverFailure(f"non-finite derivative at t={t!r}", t)
        else:
            for i in range(3):
                f0[i] = k[6][i]

    return {
        "t": bt_arr[: n_seg + 1].copy(),
        "states": states_arr[: n_seg + 1].copy(),
        "raw_ends": raw_arr[:n_seg].copy(),
        "coeffs": coeff_arr[:n_seg].copy(),
        "p": p_arr[: n_seg + 1].copy(),
        "ev_t": ev_t_arr[:n_ev].copy(),
        "ev_code": ev_code_arr[:n_ev].copy(),
        "ev_comp": ev_comp_arr[:n_ev].copy(),
        "ev_old": ev_old_arr[:n_ev].copy(),
        "ev_new": ev_new_arr[:n_ev].copy(),
        "nfev": nfev,
        "n_rejected": n_rejected,
        "n_steps": n_seg,
    }
