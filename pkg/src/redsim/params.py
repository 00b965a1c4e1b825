"""Model parameters and runtime state records.

Two parameter profiles ship with the package. They describe the same
router/TCP fluid system but disagree on the round-trip time and on whether
the averaged queue length is clamped at the queue capacity:

* ``julia``: T = 0.5 s, clamps w, q and q_avg.
* ``modelica``: T = 0.05 s, clamps w and q only.

The boolean flags expose documented modelling ambiguities so that either
reading stays reachable:

* ``use_drop_factor_in_queue``: include the (1 - p) thinning factor in the
  queue arrival rate (the differential-equation reading) instead of the
  raw N*w/T arrival rate (what both reference listings compute).
* ``delayed_drop``: the window loss term uses the drop probability from
  one round-trip ago, p(t - T), instead of the current controller output.
* ``use_heaviside_cap``: gate window growth to zero at w >= w_max.
* ``prehistory_mode``: value of the delayed window before the start time,
  ``zero`` or ``hold_initial``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

PREHISTORY_MODES = ("zero", "hold_initial")


@dataclass(frozen=True)
class RedParams:
    """Constants of the TCP/RED fluid model (packets and seconds)."""

    T: float = 0.5  # round-trip time, s
    N: float = 60.0  # concurrent TCP sessions
    C: float = 2500.0  # service rate, packets/s
    w_q: float = 0.0004  # EWMA weight
    q_min: float = 0.25  # lower drop threshold, fraction of R
    q_max: float = 0.5  # upper drop threshold, fraction of R
    R: float = 300.0  # queue capacity, packets
    p_max: float = 0.1  # early-drop probability at the upper threshold
    w_max: float = 32.0  # window cap, packets
    use_drop_factor_in_queue: bool = False
    delayed_drop: bool = False
    use_heaviside_cap: bool = True
    prehistory_mode: str = "zero"
    clamp_q_avg: bool = True

    def __post_init__(self):
        if not self.T > 0.0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.N > 0.0:
            raise ValueError(f"N must be positive, got {self.N}")
        if not self.C > 0.0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not 0.0 < self.w_q < 1.0:
            raise ValueError(f"w_q must be in (0, 1), got {self.w_q}")
        if not 0.0 < self.q_min < self.q_max <= 1.0:
            raise ValueError(
                f"need 0 < q_min < q_max <= 1, got {self.q_min}, {self.q_max}"
            )
        if not self.R > 0.0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not 0.0 < self.p_max <= 1.0:
            raise ValueError(f"p_max must be in (0, 1], got {self.p_max}")
        if not self.w_max > 1.0:
            raise ValueError(f"w_max must exceed 1, got {self.w_max}")
        if self.prehistory_mode not in PREHISTORY_MODES:
            raise ValueError(
                f"prehistory_mode must be one of {PREHISTORY_MODES}, "
                f"got {self.prehistory_mode!r}"
            )

    def with_overrides(self, **overrides) -> "RedParams":
        return replace(self, **overrides)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_FIELD_TYPES = {f.name: f.type for f in fields(RedParams)}


def parse_override(key: str, value: str):
    """Parse a ``key=value`` override string against the RedParams schema."""
    if key not in _FIELD_TYPES:
        known = ", ".join(sorted(_FIELD_TYPES))
        raise KeyError(f"unknown parameter {key!r} (known: {known})")
    ftype = _FIELD_TYPES[key]
    if ftype == "bool":
        return _parse_bool(value)
    if ftype == "str":
        return value.strip()
    return float(value)


# 10 Mbps of 500-byte packets: 10e6 / (8 * 500) = 2500 packets/s.
_SERVICE_RATE = 10 * 1000000.0 / (8.0 * 500)

PROFILES: dict[str, RedParams] = {
    "julia": RedParams(T=0.5, C=_SERVICE_RATE, clamp_q_avg=True),
    "modelica": RedParams(T=0.05, C=_SERVICE_RATE, clamp_q_avg=False),
}

DEFAULT_PROFILE = "julia"

# Starting point (w, q, q_avg) shared by both profiles.
INITIAL_STATE = (1.0, 0.0, 0.0)

STATE_NAMES = ("w", "q", "q_avg")


@dataclass
class SimState:
    """Snapshot handed to the sampled controller.

    ``p`` is the zero-order-hold controller output; ``p_history`` collects
    the (time, p) steps needed for delayed-drop lookups and is shared with
    the controller.
    """

    t: float
    w: float
    q: float
    q_avg: float
    p: float
    p_history: list[tuple[float, float]] = field(default_factory=list)
