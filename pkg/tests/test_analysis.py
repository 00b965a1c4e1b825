"""Peak-detection and oscillation-metric tests on synthetic signals."""

import math

import numpy as np
import pytest

from redsim.analysis import OscillationReport, find_peaks, oscillation_metrics
from redsim.dde import Trajectory


def make_trajectory(times, values):
    """Wrap a scalar series as a single-component trajectory."""
    times = np.asarray(times, dtype=float)
    states = np.column_stack([values, np.zeros_like(times), np.zeros_like(times)])
    return Trajectory(
        t=times,
        states=states,
        p=np.zeros_like(times),
        component_names=("w", "q", "q_avg"),
    )


def sine_series(freq=1.0, dt=0.01, t_end=3.0, amplitude=1.0, decay=0.0):
    times = np.arange(0.0, t_end + dt / 2, dt)
    values = amplitude * np.exp(-decay * times) * np.sin(2 * math.pi * freq * times)
    return times, values


class TestFindPeaks:
    def test_monotone_has_none(self):
        times = np.arange(100.0)
        assert find_peaks(times, times * 2.0, 0.1) == []

    def test_constant_has_none(self):
        times = np.arange(100.0)
        assert find_peaks(times, np.ones(100), 0.1) == []

    def test_too_short_is_empty(self):
        assert find_peaks([0.0, 1.0], [0.0, 1.0], 0.1) == []

    def test_sine_peak_locations(self):
        times, values = sine_series()
        peaks = find_peaks(times, values, 0.5)
        assert len(peaks) == 3
        for peak, expected in zip(peaks, (0.25, 1.25, 2.25)):
            assert abs(peak.t - expected) <= 0.01

    def test_prominence_filter(self):
        # Small ripple on top of a big swing: only the big peaks survive.
        times = np.arange(0.0, 4.0, 0.001)
        values = np.sin(2 * math.pi * times) + 0.05 * np.sin(
            2 * math.pi * 25 * times
        )
        big = find_peaks(times, values, 0.5)
        ripple = find_peaks(times, values, 0.01)
        assert len(big) == 4
        assert len(ripple) > 3 * len(big)

    def test_unordered_series_rejected(self):
        with pytest.raises(ValueError):
            find_peaks([0.0, 2.0, 1.0], [0.0, 1.0, 0.0], 0.1)

    def test_plateau_counts_once(self):
        values = [0.0, 1.0, 1.0, 1.0, 0.0]
        times = [0.0, 1.0, 2.0, 3.0, 4.0]
        peaks = find_peaks(times, values, 0.5)
        assert len(peaks) == 1
        assert peaks[0].t == 2.0

    def test_agrees_with_scipy_reference(self):
        # Independent oracle: scipy's prominence definition matches ours.
        signal = pytest.importorskip("scipy.signal")
        rng = np.random.default_rng(42)
        times = np.arange(0.0, 20.0, 0.01)
        values = (
            np.sin(2 * math.pi * 0.4 * times)
            + 0.4 * np.sin(2 * math.pi * 1.7 * times)
            + 0.05 * rng.standard_normal(times.shape)
        )
        ours = find_peaks(times, values, 0.3)
        idx, props = signal.find_peaks(values, prominence=0.3)
        assert [p.index for p in ours] == idx.tolist()
        for peak, prom in zip(ours, props["prominences"]):
            assert peak.prominence == pytest.approx(prom, rel=1e-9)


class TestOscillationMetrics:
    def test_pure_sine_sustained(self):
        times, values = sine_series(t_end=5.0)
        traj = make_trajectory(times, values)
        rep = oscillation_metrics(traj, "w", (0.0, 5.0), 0.5)
        assert rep.sustained
        assert rep.period_cv < 0.01
        assert abs(rep.mean_period - 1.0) < 0.02

    def test_damped_sine_not_sustained(self):
        # exp(-0.5 t) loses more than half its amplitude over the window.
        times, values = sine_series(t_end=5.0, decay=0.5)
        traj = make_trajectory(times, values)
        rep = oscillation_metrics(traj, "w", (0.0, 5.0), 0.05)
        assert len(rep.peak_times) >= 3
        assert not rep.sustained

    def test_constant_not_sustained(self):
        times = np.arange(0.0, 5.01, 0.01)
        traj = make_trajectory(times, np.full_like(times, 3.0))
        rep = oscillation_metrics(traj, "w", (0.0, 5.0), 0.1)
        assert rep.peak_times == ()
        assert not rep.sustained
        assert rep.mean_period is None

    def test_window_outside_span_rejected(self):
        times, values = sine_series()
        traj = make_trajectory(times, values)
        with pytest.raises(ValueError):
            oscillation_metrics(traj, "w", (0.0, 99.0), 0.5)

    def test_translation_invariance(self):
        times, values = sine_series(t_end=5.0)
        rep_a = oscillation_metrics(make_trajectory(times, values), "w", None, 0.5)
        rep_b = oscillation_metrics(
            make_trajectory(times + 13.0, values), "w", None, 0.5
        )
        assert rep_a.amplitudes == rep_b.amplitudes
        assert rep_a.mean_period == pytest.approx(rep_b.mean_period, rel=1e-12)
        assert rep_a.period_cv == pytest.approx(rep_b.period_cv, rel=1e-9)
        assert rep_a.sustained == rep_b.sustained

    def test_scale_covariance(self):
        times, values = sine_series(t_end=5.0)
        k = 7.5
        rep_a = oscillation_metrics(make_trajectory(times, values), "w", None, 0.5)
        rep_b = oscillation_metrics(
            make_trajectory(times, k * values), "w", None, 0.5 * k
        )
        assert rep_a.peak_times == rep_b.peak_times
        for amp_a, amp_b in zip(rep_a.amplitudes, rep_b.amplitudes):
            assert amp_b == pytest.approx(k * amp_a, rel=1e-12)
        assert rep_a.sustained == rep_b.sustained

    def test_report_dict_roundtrip(self):
        times, values = sine_series()
        rep = oscillation_metrics(make_trajectory(times, values), "w", None, 0.5)
        payload = rep.as_dict()
        assert payload["component"] == "w"
        assert payload["n_peaks"] == len(rep.peak_times)
        assert isinstance(rep, OscillationReport)
