"""Compiled-vs-Python backend agreement.

The compiled core is required to replay the exact floating-point operation
sequence of the pure-Python engine, so everything it produces must be
bit-identical, not merely close.
"""

import numpy as np
import pytest

from redsim._backend import HAVE_COMPILED, resolve_backend
from redsim.params import PROFILES
from redsim.simulate import simulate

pytestmark = pytest.mark.skipif(
    not HAVE_COMPILED, reason="compiled backend not built"
)

CASES = {
    "julia": dict(params=PROFILES["julia"], tf=12.0),
    "modelica": dict(params=PROFILES["modelica"], tf=12.0),
    "delayed_drop": dict(
        params=PROFILES["julia"].with_overrides(delayed_drop=True), tf=12.0
    ),
    "drop_factor": dict(
        params=PROFILES["julia"].with_overrides(use_drop_factor_in_queue=True),
        tf=12.0,
    ),
    "hold_prehistory": dict(
        params=PROFILES["julia"].with_overrides(prehistory_mode="hold_initial"),
        tf=6.0,
    ),
    "no_controller": dict(
        params=PROFILES["julia"], tf=12.0, controller_enabled=False
    ),
    "full_run": dict(params=PROFILES["julia"], tf=30.0),
}


@pytest.mark.parametrize("label", sorted(CASES))
def test_backends_bitwise_identical(label):
    kwargs = CASES[label]
    a = simulate(backend="python", **kwargs)
    b = simulate(backend="compiled", **kwargs)
    assert a.t.tolist() == b.t.tolist()
    assert a.states.tolist() == b.states.tolist()
    assert a.p.tolist() == b.p.tolist()
    assert a.events == b.events
    assert len(a.segments) == len(b.segments)
    for sa, sb in zip(a.segments, b.segments):
        assert sa.t_start == sb.t_start and sa.t_end == sb.t_end
        assert sa.y_start == sb.y_start
        assert sa.y_end == sb.y_end
        assert sa.coeffs == sb.coeffs


def test_dense_eval_matches_between_backends():
    a = simulate(backend="python", tf=8.0)
    b = simulate(backend="compiled", tf=8.0)
    for t in np.linspace(0.0, 8.0, 257):
        assert a.eval(float(t)) == b.eval(float(t))


def test_auto_prefers_compiled(monkeypatch):
    monkeypatch.delenv("REDSIM_BACKEND", raising=False)
    assert resolve_backend("auto") == "compiled"


def test_env_override(monkeypatch):
    monkeypatch.setenv("REDSIM_BACKEND", "python")
    assert resolve_backend("auto") == "python"
