"""Event-layer tests: clamps, sampled callbacks, hook ordering."""

import pytest

from redsim.events import (
    ClampSpec,
    EventHooks,
    SampledCallback,
    apply_clamps,
    run_sampled_callback,
)
from redsim.params import SimState

W_CLAMP = ClampSpec(0, lower=1.0, upper=32.0)
Q_CLAMP = ClampSpec(1, lower=0.0, upper=300.0)


class TestApplyClamps:
    def test_window_floor(self):
        y, fired = apply_clamps((0.4, 10.0, 5.0), (W_CLAMP, Q_CLAMP))
        assert y == (1.0, 10.0, 5.0)
        assert fired == [(0, 0, 0.4, 1.0)]

    def test_queue_ceiling(self):
        y, fired = apply_clamps((2.0, 305.0, 5.0), (W_CLAMP, Q_CLAMP))
        assert y == (2.0, 300.0, 5.0)
        assert fired == [(1, 1, 305.0, 300.0)]

    def test_in_bounds_untouched(self):
        y, fired = apply_clamps((2.0, 10.0, 5.0), (W_CLAMP, Q_CLAMP))
        assert y == (2.0, 10.0, 5.0)
        assert fired == []

    def test_boundary_value_not_an_event(self):
        y, fired = apply_clamps((1.0, 300.0, 5.0), (W_CLAMP, Q_CLAMP))
        assert y == (1.0, 300.0, 5.0)
        assert fired == []

    def test_idempotent(self):
        y1, _ = apply_clamps((0.4, 305.0, -2.0), (W_CLAMP, Q_CLAMP))
        y2, fired = apply_clamps(y1, (W_CLAMP, Q_CLAMP))
        assert y1 == y2
        assert fired == []

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            ClampSpec(0, lower=2.0, upper=1.0)


class TestSampledCallback:
    def make_cb(self, calls):
        def affect(state):
            calls.append(state.t)
            return 0.25

        return SampledCallback.on_grid((0.0, 0.01, 0.02), affect)

    def test_runs_on_grid(self):
        calls = []
        cb = self.make_cb(calls)
        state = SimState(t=0.01, w=1.0, q=0.0, q_avg=0.0, p=0.0)
        assert run_sampled_callback(0.01, state, cb) == 0.25
        assert calls == [0.01]

    def test_off_grid_rejected(self):
        calls = []
        cb = self.make_cb(calls)
        state = SimState(t=0.005, w=1.0, q=0.0, q_avg=0.0, p=0.0)
        with pytest.raises(ValueError):
            run_sampled_callback(0.005, state, cb)
        assert calls == []

    def test_deterministic_for_same_average(self):
        seen = []

        def affect(state):
            seen.append(state.q_avg)
            return state.q_avg * 2.0

        cb = SampledCallback.on_grid((0.0, 0.01), affect)
        s1 = SimState(t=0.0, w=1.0, q=0.0, q_avg=0.3, p=0.0)
        s2 = SimState(t=0.01, w=9.0, q=4.0, q_avg=0.3, p=0.0)
        assert run_sampled_callback(0.0, s1, cb) == run_sampled_callback(0.01, s2, cb)


class TestEventHooks:
    def make_hooks(self, grid=(0.0, 0.01)):
        def affect(state):
            # Controller reads the clamped state: keep what it saw.
            self.seen.append((state.t, state.w, state.q))
            return 0.5

        self.seen = []
        return EventHooks(
            clamps=(W_CLAMP, Q_CLAMP),
            sampled=SampledCallback.on_grid(grid, affect),
            component_names=("w", "q", "q_avg"),
        )

    def test_clamps_run_before_callback(self):
        hooks = self.make_hooks()
        y, p, changed = hooks.at_boundary(0.01, (0.4, 305.0, 5.0), True)
        assert y == (1.0, 300.0, 5.0)
        assert self.seen == [(0.01, 1.0, 300.0)]
        assert p == 0.5
        assert changed

    def test_unflagged_boundary_skips_callback(self):
        hooks = self.make_hooks()
        y, p, changed = hooks.at_boundary(0.005, (2.0, 10.0, 5.0), False)
        assert self.seen == []
        assert p == 0.0
        assert not changed

    def test_control_event_only_on_change(self):
        hooks = self.make_hooks()
        hooks.at_boundary(0.0, (2.0, 10.0, 5.0), True)
        hooks.at_boundary(0.01, (2.0, 10.0, 5.0), True)
        kinds = [ev.kind for ev in hooks.events()]
        assert kinds == ["control"]  # second update leaves p at 0.5

    def test_event_formatting(self):
        hooks = self.make_hooks()
        hooks.at_boundary(0.0, (0.4, 10.0, 5.0), False)
        (ev,) = hooks.events()
        assert ev.kind == "clamp_lower"
        assert ev.component == "w"
        assert ev.detail == "0.4->1.0"
