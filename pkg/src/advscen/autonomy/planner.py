"""Sampling-based motion planner used as the system under test."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ..geometry import boxes_overlap, project_to_polyline
from ..kinematics import DEFAULT_BOUNDS, KAPPA, THETA, V, Trajectory, rollout_batch
from ..scenario import HDMap

LATERAL_OFFSETS = (-3.0, -1.5, 0.0, 1.5, 3.0)
SPEED_CHANGES = (-10.0, -6.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0)
REACH_TIMES = (1.0, 2.0, 3.0, 4.0, 5.0)
_LATERAL_GAIN = 1.0  # natural frequency of the offset-tracking loop, rad/s


@dataclass(frozen=True)
class Obstacle:
    """Footprint and future poses (plan steps 1..n_future) of something to avoid."""

    dims: tuple
    poses: np.ndarray
    id: int = -1


@dataclass(frozen=True)
class PlannerInput:
    map: HDMap
    sdv_history: np.ndarray  # (n_history, 6), last row is the current state
    n_future: int
    dt: float
    sdv_dims: tuple = (4.5, 2.0)
    sweeps: tuple = ()

    def __post_init__(self):
        if self.sweeps and len(self.sweeps) != len(self.sdv_history):
            raise ValueError("one sweep per observation frame is required")


@dataclass(frozen=True)
class Plan:
    trajectory: Trajectory  # n_future + 1 states, starting at the current SDV state
    cost: float
    breakdown: dict
    index: int
    unavoidable: bool = False
    obstacles: tuple = field(default=(), compare=False, repr=False)


def jerk(v, dt: float) -> np.ndarray:
    """Longitudinal jerk by central second differences of speed, interior samples."""
    v = np.asarray(v, dtype=float)
    return (v[..., 2:] - 2.0 * v[..., 1:-1] + v[..., :-2]) / dt**2


def lateral_acceleration(states) -> np.ndarray:
    s = np.asarray(states, dtype=float)
    return s[..., V] ** 2 * s[..., KAPPA]


def lane_following_rollouts(s0, centerline, targets, n_future: int, dt: float) -> np.ndarray:
    """Roll out one trajectory per ``(lateral offset, speed change, reach time)`` row.

    Speed follows a ramp that reaches ``v0 + speed change`` after the reach
    time; steering is a critically damped loop on the signed offset from
    ``centerline``. Returns ``(K, n_future + 1, 6)`` starting at ``s0``.
    """
    s0 = np.asarray(s0, dtype=float)
    targets = np.asarray(targets, dtype=float).reshape(-1, 3)
    K = len(targets)
    v_target = np.clip(s0[V] + targets[:, 1], 0.0, DEFAULT_BOUNDS.max_speed)
    states = np.empty((K, n_future + 1, 6))
    states[:, 0] = s0
    cur = np.repeat(s0[None], K, axis=0)
    w = _LATERAL_GAIN
    for t in range(n_future):
        remaining = np.maximum(targets[:, 2] - t * dt, dt)
        a = np.clip((v_target - cur[:, V]) / remaining, -DEFAULT_BOUNDS.max_acceleration,
                    DEFAULT_BOUNDS.max_acceleration)
        _, offset, _, lane_heading = project_to_polyline(cur[:, :2], centerline)
        err = offset - targets[:, 0]
        v_eff = np.maximum(cur[:, V], 1.0)
        head_err = np.sin(cur[:, THETA] - lane_heading)
        k_des = (-(w**2) * err - 2.0 * w * v_eff * head_err) / v_eff**2
        kdot = np.clip((k_des - cur[:, KAPPA]) / dt, -DEFAULT_BOUNDS.max_curvature_rate,
                       DEFAULT_BOUNDS.max_curvature_rate)
        nxt, _ = rollout_batch(cur, np.stack([a, kdot], axis=1)[:, None, :], dt)
        cur = nxt[:, 1]
        states[:, t + 1] = cur
    return states


class SamplingPlanner(BaseEstimator):
    """Lane-aligned candidate sampler with a weighted cost.

    Candidates are bicycle-model rollouts combining a target lateral offset,
    a target speed change and the time to reach it (5 x 8 x 5 = 200 by
    default). The cost is::

        w_col * colliding steps + w_lane * sum(offset^2)
        - w_prog * min(progress, current speed * horizon)
        + w_comf * sum(jerk^2 + lateral_accel^2)

    where collisions are checked against obstacle boxes inflated by
    ``inflation`` on every side.
    """

    def __init__(self, w_col=1000.0, w_lane=1.0, w_prog=5.0, w_comf=0.1, inflation=0.3,
                 lateral_offsets=LATERAL_OFFSETS, speed_changes=SPEED_CHANGES, reach_times=REACH_TIMES):
        self.w_col = w_col
        self.w_lane = w_lane
        self.w_prog = w_prog
        self.w_comf = w_comf
        self.inflation = inflation
        self.lateral_offsets = lateral_offsets
        self.speed_changes = speed_changes
        self.reach_times = reach_times

    def _grid(self):
        return np.array(
            [(d, dv, tr) for d in self.lateral_offsets for dv in self.speed_changes for tr in self.reach_times],
            dtype=float,
        )

    def candidates(self, inp: PlannerInput):
        """Candidate states ``(K, n_future + 1, 6)`` and their obstacle-free cost terms.

        Cached on the instance per ``(current state, map, horizon)`` since the
        SDV start never changes within an attack.
        """
        s0 = np.asarray(inp.sdv_history[-1], dtype=float)
        map_key = tuple((lane.id, lane.width, lane.centerline.tobytes()) for lane in inp.map.lanes)
        key = (s0.tobytes(), map_key, inp.n_future, inp.dt, self._grid().tobytes())
        cache = self.__dict__.setdefault("_candidate_cache", {})
        if key in cache:
            return cache[key]
        lane = inp.map.nearest_lane(s0[:2])
        grid = self._grid()
        K, T, dt = len(grid), inp.n_future, inp.dt
        station0, _, _, _ = project_to_polyline(s0[None, :2], lane.centerline)
        states = lane_following_rollouts(s0, lane.centerline, grid, T, dt)

        station, offset, _, _ = project_to_polyline(states[:, 1:, :2].reshape(-1, 2), lane.centerline)
        station = station.reshape(K, T)
        offset = offset.reshape(K, T)
        progress = station[:, -1] - station0[0]
        horizon = T * dt
        j = jerk(states[..., V], dt)
        lat = lateral_acceleration(states[:, 1:])
        terms = {
            "lane": np.sum(offset**2, axis=1),
            "progress": -np.minimum(progress, s0[V] * horizon),
            "comfort": np.sum(j**2, axis=1) + np.sum(lat**2, axis=1),
        }
        cache[key] = (states, terms)
        return states, terms

    def collision_steps(self, states, obstacles, sdv_dims) -> np.ndarray:
        """Per-candidate count of plan steps overlapping an inflated obstacle."""
        K, T = states.shape[0], states.shape[1] - 1
        if not obstacles:
            return np.zeros(K)
        poses = np.stack([np.asarray(o.poses, dtype=float)[:T] for o in obstacles])  # (O, T, 3)
        dims = np.stack([np.asarray(o.dims, dtype=float) for o in obstacles]) + 2.0 * self.inflation
        hit = boxes_overlap(states[:, None, 1:, :3], np.asarray(sdv_dims, dtype=float),
                            poses[None], dims[None, :, None, :])
        return hit.any(axis=1).sum(axis=1).astype(float)

    def score(self, inp: PlannerInput, obstacles):
        """Total cost of every candidate and the per-term breakdown."""
        states, terms = self.candidates(inp)
        col = self.collision_steps(states, list(obstacles), inp.sdv_dims)
        total = (self.w_col * col + self.w_lane * terms["lane"] + self.w_prog * terms["progress"]
                 + self.w_comf * terms["comfort"])
        return states, total, dict(terms, collision=col)

    def plan(self, inp: PlannerInput, obstacles=()) -> Plan:
        obstacles = tuple(obstacles)
        states, total, terms = self.score(inp, obstacles)
        k = int(np.argmin(total))
        breakdown = {name: float(vals[k]) for name, vals in terms.items()}
        return Plan(Trajectory(states[k]), float(total[k]), breakdown, k,
                    unavoidable=bool(np.all(terms["collision"] > 0)), obstacles=obstacles)

    predict = plan
