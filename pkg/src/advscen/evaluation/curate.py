"""Pick the most interaction-heavy 6 s window out of a longer log.

Each candidate window is scored by how often plausible SDV manoeuvres
(keep lane, change left, change right) would hit another actor. Two kinds
of hits do not count: with the vehicle directly ahead in the SDV lane (a
rear-end is the SDV's own fault) and with vehicles that never move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autonomy.planner import lane_following_rollouts
from ..geometry import boxes_overlap, project_to_polyline
from ..kinematics import Trajectory
from ..rng import as_random_source
from ..scenario import Actor, Scenario

WINDOW_STEPS = 12  # 6 s at 0.5 s
STRIDE_STEPS = 4  # 2 s
N_HISTORY = 2
BEHAVIORS = ("keep_lane", "left_change", "right_change")
N_PER_BEHAVIOR = 100
STATIC_SPEED = 0.5


class LogTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class Curation:
    scenario: Scenario
    start: int
    scores: tuple  # per window, in start order

    @property
    def best_score(self) -> float:
        return max(self.scores)


def window(log: Scenario, start: int, steps: int = WINDOW_STEPS, n_history: int = N_HISTORY) -> Scenario:
    """Slice ``steps`` states starting at ``start`` out of a log."""
    if start < 0 or start + steps > log.horizon:
        raise ValueError(f"window [{start}, {start + steps}) outside log of {log.horizon} steps")
    sl = slice(start, start + steps)
    actors = tuple(
        Actor(a.id, a.length, a.width, Trajectory(a.trajectory.states[sl]), a.perturbable) for a in log.actors
    )
    return Scenario(log.map, actors, Trajectory(log.sdv_expert.states[sl]), log.dt, n_history,
                    steps - n_history, log.sdv_length, log.sdv_width, name=f"{log.name}@{start}")


def candidate_manoeuvres(scenario: Scenario, rng: np.random.Generator, n: int = N_PER_BEHAVIOR) -> np.ndarray:
    """``(3 * n, n_future + 1, 6)`` SDV rollouts, ``n`` per behaviour in BEHAVIORS order."""
    s0 = scenario.sdv_expert.states[scenario.current_index]
    lane = scenario.map.nearest_lane(s0[:2])
    out = []
    for shift in (0.0, lane.width, -lane.width):
        targets = np.column_stack([
            shift + rng.uniform(-0.5, 0.5, n),
            rng.uniform(-6.0, 3.0, n),
            rng.uniform(1.0, 5.0, n),
        ])
        out.append(lane_following_rollouts(s0, lane.centerline, targets, scenario.n_future, scenario.dt))
    return np.concatenate(out)


def suppressed_actors(scenario: Scenario) -> set:
    """Ids of the vehicle directly ahead in the SDV lane and of static vehicles."""
    now = scenario.current_index
    s0 = scenario.sdv_expert.states[now]
    lane = scenario.map.nearest_lane(s0[:2])
    st0, _, _, _ = project_to_polyline(s0[None, :2], lane.centerline)
    out = set()
    ahead = []
    for a in scenario.actors:
        states = a.trajectory.states
        moved = np.hypot(*(states[-1, :2] - states[0, :2]))
        if np.max(np.abs(states[:, 3])) < STATIC_SPEED and moved < STATIC_SPEED * scenario.dt * len(states):
            out.add(a.id)
            continue
        st, off, _, _ = project_to_polyline(states[now, None, :2], lane.centerline)
        if abs(off[0]) < lane.width / 2.0 and st[0] > st0[0]:
            ahead.append((st[0] - st0[0], a.id))
    if ahead:
        out.add(min(ahead)[1])
    return out


def collision_fraction(scenario: Scenario, rng: np.random.Generator, n: int = N_PER_BEHAVIOR) -> float:
    """Share of sampled manoeuvres that hit a non-suppressed actor within the horizon."""
    cands = candidate_manoeuvres(scenario, rng, n)
    skip = suppressed_actors(scenario)
    now = scenario.current_index
    hit = np.zeros(len(cands), dtype=bool)
    for a in scenario.actors:
        if a.id in skip:
            continue
        poses = a.trajectory.poses[now + 1 :]
        hit |= boxes_overlap(cands[:, 1:, :3], scenario.sdv_dims, poses[None], a.dims).any(axis=1)
    return float(hit.mean())


def curate(log: Scenario, rng=None, n: int = N_PER_BEHAVIOR) -> Curation:
    """Slide a 6 s window every 2 s and keep the one with the highest collision fraction.

    Ties go to the earliest window.
    """
    if log.horizon < WINDOW_STEPS:
        raise LogTooShortError(f"log has {log.horizon} steps, a window needs {WINDOW_STEPS}")
    source = as_random_source(rng)
    starts = range(0, log.horizon - WINDOW_STEPS + 1, STRIDE_STEPS)
    scores = []
    for start in starts:
        win = window(log, start)
        scores.append(collision_fraction(win, source.stream(f"curate/window-{start}"), n))
    best = int(np.argmax(scores))
    start = starts[best]
    return Curation(window(log, start), start, tuple(scores))
