"""Autonomy stacks exposed to the attacker as black boxes returning a Plan."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..kinematics import Trajectory
from ..scenario import Scenario
from ..sensorsim import DEFAULT_N_RAYS, LidarSimulator
from .perception import ASSOCIATION_GATE, CLUSTER_DISTANCE, MIN_POINTS, detect, forecast
from .planner import Obstacle, Plan, PlannerInput, SamplingPlanner

STACK_KINDS = ("ground_truth", "sensor")


def planner_input(scenario: Scenario, sweeps=()) -> PlannerInput:
    return PlannerInput(
        map=scenario.map,
        sdv_history=scenario.sdv_expert.states[: scenario.n_history],
        n_future=scenario.n_future,
        dt=scenario.dt,
        sdv_dims=(scenario.sdv_length, scenario.sdv_width),
        sweeps=tuple(sweeps),
    )


def _normalize(perturbed) -> dict:
    return {k: v if isinstance(v, Trajectory) else Trajectory(v) for k, v in (perturbed or {}).items()}


def constant_velocity_poses(states, now: int, dt: float, n_future: int) -> np.ndarray:
    """Extrapolate the last observed displacement of a state sequence -> ``(n_future, 3)``."""
    xy = states[now, :2]
    vel = (states[now, :2] - states[now - 1, :2]) / dt
    speed = float(np.hypot(*vel))
    heading = float(np.arctan2(vel[1], vel[0])) if speed > 0.5 else float(states[now, 2])
    steps = np.arange(1, n_future + 1, dtype=float) * dt
    return np.column_stack([xy[None] + steps[:, None] * vel[None], np.full(n_future, heading)])


class GroundTruthStack(BaseEstimator):
    """Planner fed exact actor states instead of LiDAR detections.

    With ``forecast="constant_velocity"`` (default) the observed true states
    go through the same constant-velocity extrapolation as the sensor stack,
    so only perception is idealized. ``forecast="oracle"`` hands the planner
    the actual future of every actor instead.
    """

    kind = "ground_truth"

    def __init__(self, planner=None, forecast="constant_velocity"):
        self.planner = planner
        self.forecast = forecast

    def _planner(self) -> SamplingPlanner:
        if self.planner is None:
            self.planner = SamplingPlanner()
        return self.planner

    def obstacles(self, scenario: Scenario, perturbed=None) -> list[Obstacle]:
        world = scenario.with_trajectories(_normalize(perturbed))
        now = scenario.current_index
        if self.forecast == "oracle":
            return [Obstacle((a.length, a.width), a.trajectory.states[now + 1 :, :3], a.id) for a in world.actors]
        if self.forecast != "constant_velocity":
            raise ValueError(f"unknown forecast {self.forecast!r}; expected 'constant_velocity' or 'oracle'")
        return [
            Obstacle((a.length, a.width),
                     constant_velocity_poses(a.trajectory.states, now, scenario.dt, scenario.n_future), a.id)
            for a in world.actors
        ]

    def predict(self, scenario: Scenario, perturbed=None) -> Plan:
        return self._planner().plan(planner_input(scenario), self.obstacles(scenario, perturbed))


class SensorStack(BaseEstimator):
    """Simulated LiDAR -> clustering detector -> constant-velocity forecast -> planner.

    The simulator keeps per-scenario caches, so one stack instance may be
    reused across every query of an attack.
    """

    kind = "sensor"

    def __init__(self, planner=None, n_rays=DEFAULT_N_RAYS, cluster_distance=CLUSTER_DISTANCE,
                 min_points=MIN_POINTS, gate=ASSOCIATION_GATE):
        self.planner = planner
        self.n_rays = n_rays
        self.cluster_distance = cluster_distance
        self.min_points = min_points
        self.gate = gate

    def _planner(self) -> SamplingPlanner:
        if self.planner is None:
            self.planner = SamplingPlanner()
        return self.planner

    def simulator(self, scenario: Scenario) -> LidarSimulator:
        sims = self.__dict__.setdefault("_simulators", {})
        key = (scenario.digest(), self.n_rays)
        if key not in sims:
            sims[key] = LidarSimulator(scenario, n_rays=self.n_rays)
        return sims[key]

    def sweeps(self, scenario: Scenario, perturbed=None):
        return self.simulator(scenario).simulate(_normalize(perturbed))

    def perceive(self, sweeps, scenario: Scenario):
        frames = [detect(sw, self.cluster_distance, self.min_points) for sw in sweeps]
        return frames, forecast(frames, scenario.dt, scenario.n_future, self.gate)

    def obstacles(self, scenario: Scenario, perturbed=None, sweeps=None) -> list[Obstacle]:
        if sweeps is None:
            sweeps = self.sweeps(scenario, perturbed)
        _, predicted = self.perceive(sweeps, scenario)
        return [Obstacle(p.dims, p.poses, i) for i, p in enumerate(predicted)]

    def predict(self, scenario: Scenario, perturbed=None, sweeps=None) -> Plan:
        if sweeps is None:
            sweeps = self.sweeps(scenario, perturbed)
        inp = planner_input(scenario, sweeps)
        return self._planner().plan(inp, self.obstacles(scenario, perturbed, sweeps))


def make_stack(kind: str, planner: SamplingPlanner | None = None):
    if kind == "ground_truth":
        return GroundTruthStack(planner)
    if kind == "sensor":
        return SensorStack(planner)
    raise ValueError(f"unknown stack kind {kind!r}; expected one of {STACK_KINDS}")


def run_stack(kind, scenario: Scenario, perturbed=None, planner: SamplingPlanner | None = None) -> Plan:
    """Run one stack on the scenario with ``perturbed`` (actor id -> Trajectory) applied."""
    stack = make_stack(kind, planner) if isinstance(kind, str) else kind
    return stack.predict(scenario, perturbed)
