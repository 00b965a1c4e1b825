"""CSV / report serialization.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same double, so emitted files are byte-deterministic and
round-trip losslessly.
"""

from __future__ import annotations

import json

import numpy as np

TRAJECTORY_HEADER = "t,w,q,q_avg,p"
EVENTS_HEADER = "t,kind,component,detail"


def format_float(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(path, traj) -> None:
    write_samples_csv(path, traj.t, traj.states, traj.p)


def write_samples_csv(path, times, states, p) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for i in range(len(times)):
            row = states[i]
            fh.write(
                f"{format_float(times[i])},{format_float(row[0])},"
                f"{format_float(row[1])},{format_float(row[2])},"
                f"{format_float(p[i])}\n"
            )


def read_trajectory_csv(path):
    """Parse a trajectory CSV back into (t, states, p) arrays."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        times, states, p = [], [], []
        for line in fh:
            parts = line.strip().split(",")
            times.append(float(parts[0]))
            states.append([float(parts[1]), float(parts[2]), float(parts[3])])
            p.append(float(parts[4]))
    return np.array(times), np.array(states), np.array(p)


def write_events_csv(path, events) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(EVENTS_HEADER + "\n")
        for ev in events:
            fh.write(f"{format_float(ev.t)},{ev.kind},{ev.component},{ev.detail}\n")


def write_report_json(path, reports) -> None:
    payload = {rep.component: rep.as_dict() for rep in reports}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
