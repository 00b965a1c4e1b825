"""Trajectory analysis: peak detection and oscillation metrics.

A peak's prominence is its height above the higher of the two flanking
minima, where each flank extends until the series rises above the peak (or
hits the window edge). ``sustained`` certifies a limit cycle: enough
peaks, regular spacing, and no significant amplitude decay across the
analysis window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Limit-cycle verdict thresholds.
MIN_PEAKS = 3
PERIOD_CV_MAX = 0.2
AMPLITUDE_RETENTION_MIN = 0.5

# Peak prominence floors (packets) chosen above solver noise and well
# below any physically meaningful swing of the model.
DEFAULT_PROMINENCE = {"w": 1.0, "q": 5.0, "q_avg": 5.0}


@dataclass(frozen=True)
class Peak:
    index: int
    t: float
    value: float
    prominence: float


@dataclass(frozen=True)
class OscillationReport:
    component: str
    peak_times: tuple[float, ...]
    amplitudes: tuple[float, ...]
    mean_period: float | None
    period_cv: float | None
    sustained: bool

    def as_dict(self) -> dict:
        return {
            "component": self.component,
            "n_peaks": len(self.peak_times),
            "peak_times": list(self.peak_times),
            "amplitudes": list(self.amplitudes),
            "mean_period": self.mean_period,
            "period_cv": self.period_cv,
            "sustained": self.sustained,
        }


def _plateau_peaks(values) -> list[int]:
    """Indices of local maxima; a flat top counts once, at its midpoint."""
    n = len(values)
    peaks = []
    i = 1
    while i < n - 1:
        if values[i - 1] < values[i]:
            j = i
            while j < n - 1 and values[j + 1] == values[i]:
                j += 1
            if j < n - 1 and values[j + 1] < values[i]:
                peaks.append((i + j) // 2)
            i = j + 1
        else:
            i += 1
    return peaks


def _prominence(values, peak: int) -> float:
    height = values[peak]
    left_min = height
    for j in range(peak - 1, -1, -1):
        if values[j] > height:
            break
        if values[j] < left_min:
            left_min = values[j]
    right_min = height
    for j in range(peak + 1, len(values)):
        if values[j] > height:
            break
        if values[j] < right_min:
            right_min = values[j]
    return height - max(left_min, right_min)


def find_peaks(
    times: Sequence[float], values: Sequence[float], min_prominence: float
) -> list[Peak]:
    """Local maxima with prominence >= min_prominence, in time order."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError("times and values must have matching shapes")
    if np.any(np.diff(times) < 0):
        raise ValueError("series must be time-ordered")
    if len(values) < 3:
        return []
    vals = values.tolist()
    peaks = []
    for idx in _plateau_peaks(vals):
        prom = _prominence(vals, idx)
        if prom >= min_prominence:
            peaks.append(Peak(idx, float(times[idx]), vals[idx], prom))
    return peaks


def oscillation_metrics(
    trajectory,
    component,
    window: tuple[float, float] | None = None,
    min_prominence: float | None = None,
) -> OscillationReport:
    """Peak statistics of one trajectory component inside a time window."""
    comp_idx = trajectory.component_index(component)
    name = trajectory.component_names[comp_idx]
    if window is None:
        window = (trajectory.t0, trajectory.tf)
    t_a, t_b = window
    if t_a < trajectory.t0 or t_b > trajectory.tf or not t_a < t_b:
        raise ValueError(
            f"window {window!r} outside span "
            f"[{trajectory.t0!r}, {trajectory.tf!r}]"
        )
    if min_prominence is None:
        min_prominence = DEFAULT_PROMINENCE.get(name, 1.0)

    mask = (trajectory.t >= t_a) & (trajectory.t <= t_b)
    times = trajectory.t[mask]
    values = trajectory.states[mask, comp_idx]
    peaks = find_peaks(times, values, min_prominence)

    peak_times = tuple(p.t for p in peaks)
    amplitudes = tuple(p.prominence for p in peaks)
    mean_period = None
    period_cv = None
    if len(peaks) >= 2:
        diffs = [b - a for a, b in zip(peak_times, peak_times[1:])]
        mean_period = sum(diffs) / len(diffs)
        var = sum((d - mean_period) ** 2 for d in diffs) / len(diffs)
        period_cv = math.sqrt(var) / mean_period
    sustained = (
        len(peaks) >= MIN_PEAKS
        and period_cv is not None
        and period_cv <= PERIOD_CV_MAX
        and amplitudes[-1] >= AMPLITUDE_RETENTION_MIN * amplitudes[0]
    )
    return OscillationReport(
        component=name,
        peak_times=peak_times,
        amplitudes=amplitudes,
        mean_period=mean_period,
        period_cv=period_cv,
        sustained=sustained,
    )
