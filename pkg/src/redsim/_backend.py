"""Backend selection: compiled fast path when available, else pure Python.

The compiled extension replays the exact floating-point operation sequence
of the pure-Python engine, so the two backends produce bit-identical
trajectories; selection is purely a speed concern. Override order:
explicit ``backend=`` argument, then the ``REDSIM_BACKEND`` environment
variable, then whatever is importable.
"""

from __future__ import annotations

import os

try:
    from . import _speedups
except ImportError:
    _speedups = None

HAVE_COMPILED = _speedups is not None

BACKENDS = ("python", "compiled")


def available_backends() -> tuple[str, ...]:
    return BACKENDS if HAVE_COMPILED else ("python",)


def resolve_backend(backend: str = "auto") -> str:
    """Map an 'auto'/'python'/'compiled' request to a concrete backend."""
    if backend == "auto":
        backend = os.environ.get("REDSIM_BACKEND", "").strip().lower() or (
            "compiled" if HAVE_COMPILED else "python"
        )
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r} (choose from {BACKENDS})")
    if backend == "compiled" and not HAVE_COMPILED:
        raise RuntimeError(
            "compiled backend requested but redsim._speedups is not built"
        )
    return backend
