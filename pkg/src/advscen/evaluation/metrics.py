"""Planning metrics: collision rates, distance to the human driver and comfort."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..autonomy.planner import Plan, jerk, lateral_acceleration
from ..geometry import boxes_overlap, rigid_transform
from ..scenario import Scenario

ROI_X = (-72.0, 72.0)
ROI_Y = (-40.0, 40.0)
STEPS_3S = 6
STEPS_5S = 10
METRIC_FIELDS = ("collision@3s", "collision@5s", "l2_human@3s", "l2_human@5s", "jerk", "lat_accel")


def in_roi(world: Scenario, actor) -> bool:
    """Actor center inside the ego-frame region of interest at the current step."""
    now = world.current_index
    ego = world.sdv_expert.states[now]
    xy = actor.trajectory.states[now, :2]
    local, _ = rigid_transform(xy - ego[:2], 0.0, -ego[2])
    return ROI_X[0] <= local[0] <= ROI_X[1] and ROI_Y[0] <= local[1] <= ROI_Y[1]


def first_collision_step(plan, world: Scenario) -> int | None:
    """1-based plan step of the first overlap with an in-ROI actor, or None."""
    states = plan.trajectory.states[1:] if isinstance(plan, Plan) else np.asarray(plan)
    T = len(states)
    now = world.current_index
    hit = np.zeros(T, dtype=bool)
    for actor in world.actors:
        if not in_roi(world, actor):
            continue
        hit |= boxes_overlap(states[:, :3], world.sdv_dims, actor.trajectory.poses[now + 1 : now + 1 + T], actor.dims)
    idx = np.flatnonzero(hit)
    return int(idx[0]) + 1 if len(idx) else None


def score(plan, world: Scenario, expert=None, dt: float | None = None) -> dict:
    """One metric row for a plan unrolled open-loop in ``world``.

    ``expert`` defaults to the recorded SDV future of ``world``. Comfort
    metrics are means over the horizon of absolute values.
    """
    full = plan.trajectory.states if isinstance(plan, Plan) else np.asarray(plan, dtype=float)
    fut = full[1:]
    dt = world.dt if dt is None else dt
    now = world.current_index
    if expert is None:
        expert = world.sdv_expert.states[now + 1 :]
    expert = np.asarray(getattr(expert, "states", expert), dtype=float)
    if len(expert) != len(fut):
        raise ValueError(f"horizon mismatch: plan {len(fut)} steps, expert {len(expert)}")
    if len(fut) < STEPS_5S:
        raise ValueError(f"need at least {STEPS_5S} plan steps")
    first = first_collision_step(fut, world)
    err = np.hypot(*(fut[:, :2] - expert[:, :2]).T)
    return {
        "collision@3s": float(first is not None and first <= STEPS_3S),
        "collision@5s": float(first is not None and first <= STEPS_5S),
        "l2_human@3s": float(err[STEPS_3S - 1]),
        "l2_human@5s": float(err[STEPS_5S - 1]),
        "jerk": float(np.mean(np.abs(jerk(full[:, 3], dt)))),
        "lat_accel": float(np.mean(np.abs(lateral_acceleration(fut)))),
    }


@dataclass
class MetricsReport:
    """Per-scenario rows plus their means."""

    rows: list = field(default_factory=list)

    def add(self, row: dict, **keys):
        self.rows.append({**keys, **row})

    @property
    def aggregate(self) -> dict:
        if not self.rows:
            return {}
        return {k: float(np.mean([r[k] for r in self.rows])) for k in METRIC_FIELDS}

    def __len__(self) -> int:
        return len(self.rows)


def to_csv(rows: list[dict], path=None) -> str:
    """Comma-separated text of ``rows`` (union of keys, first-seen order)."""
    cols: list = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt(r.get(k, "")) for k in cols})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return v
