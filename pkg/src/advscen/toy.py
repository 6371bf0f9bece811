"""Synthetic scenes: the shipped toy suite, the occluding-bus case and random scenes.

All scenes use a straight multi-lane road along +x with the SDV in lane 0
at the origin at the last observation step.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import boxes_overlap
from .kinematics import Trajectory
from .scenario import (
    DEFAULT_DT,
    DEFAULT_N_FUTURE,
    DEFAULT_N_HISTORY,
    Actor,
    HDMap,
    Lane,
    Scenario,
    ScenarioValidationError,
    load_scenario,
    save_scenario,
    validate,
)

LANE_WIDTH = 3.5
ROAD_START, ROAD_END = -80.0, 160.0
CAR = (4.5, 2.0)
BUS = (22.0, 2.5)  # articulated

TOY_SUITE = ("lead_brake", "cut_in_left", "cut_in_right", "fast_overtaker", "slow_lead_left", "two_actor")


def straight_road(lane_offsets=(-1, 0, 1), buildings: bool = True, width: float = LANE_WIDTH) -> HDMap:
    lanes = tuple(
        Lane(i, np.array([[ROAD_START, k * width], [ROAD_END, k * width]]), width)
        for i, k in enumerate(lane_offsets)
    )
    obstacles = ()
    if buildings:
        top = (max(lane_offsets) + 0.5) * width + 2.5
        bottom = (min(lane_offsets) - 0.5) * width - 2.5
        obstacles = tuple(
            np.array(p)
            for x0 in (-40.0, 0.0, 40.0, 80.0)
            for p in (
                [[x0, top], [x0 + 30.0, top], [x0 + 30.0, top + 6.0], [x0, top + 6.0]],
                [[x0, bottom - 6.0], [x0 + 30.0, bottom - 6.0], [x0 + 30.0, bottom], [x0, bottom]],
            )
        )
    return HDMap(lanes, obstacles)


def speed_profile_states(x, y, v, accel=0.0, heading=0.0, n_history=DEFAULT_N_HISTORY,
                         n_future=DEFAULT_N_FUTURE, dt=DEFAULT_DT, accel_from: int | None = None) -> np.ndarray:
    """Straight-line states with constant speed until ``accel_from`` (default: the
    current step), then constant acceleration until stopping or 15 m/s.

    ``(x, y)`` is the position at the current step ``n_history - 1``.
    """
    H = n_history + n_future
    now = n_history - 1
    start = now if accel_from is None else accel_from
    s = np.zeros(H)
    vel = np.zeros(H)
    acc = np.zeros(H)
    pos, speed = 0.0, v
    for t in range(H):
        s[t], vel[t] = pos, speed
        a = accel if t >= start else 0.0
        nxt = np.clip(speed + a * dt, 0.0, 15.0)
        acc[t] = (nxt - speed) / dt if t >= start else 0.0
        # exact distance under piecewise-constant acceleration with clamping
        if a != 0.0 and (nxt == 0.0 or nxt == 15.0) and nxt != speed + a * dt:
            tau = (nxt - speed) / a
            pos += speed * tau + 0.5 * a * tau**2 + nxt * (dt - tau)
        else:
            pos += 0.5 * (speed + nxt) * dt
        speed = nxt
    s -= s[now]
    c, sn = np.cos(heading), np.sin(heading)
    states = np.column_stack([x + c * s, y + sn * s, np.full(H, heading), vel, np.zeros(H), acc])
    return states


def lane_change_states(x, y_from, y_to, v, t_start: float, duration: float, n_history=DEFAULT_N_HISTORY,
                       n_future=DEFAULT_N_FUTURE, dt=DEFAULT_DT) -> np.ndarray:
    """Constant-speed lane change along a cosine lateral ramp; times relative to now."""
    H = n_history + n_future
    t = (np.arange(H) - (n_history - 1)) * dt
    u = np.clip((t - t_start) / duration, 0.0, 1.0)
    lat = y_from + (y_to - y_from) * 0.5 * (1.0 - np.cos(np.pi * u))
    dlat = (y_to - y_from) * 0.5 * np.pi / duration * np.sin(np.pi * u) * ((u > 0) & (u < 1))
    vx = np.sqrt(np.maximum(v**2 - dlat**2, 0.0))
    lon = x + v * t
    heading = np.arctan2(dlat, vx)
    kappa = np.gradient(heading, dt) / max(v, 1e-6)
    return np.column_stack([lon, lat, heading, np.full(H, v), kappa, np.zeros(H)])


def _actor(aid, states, dims=CAR, perturbable=True) -> Actor:
    return Actor(aid, float(dims[0]), float(dims[1]), Trajectory(states), perturbable)


def _scenario(name, hd_map, sdv_states, actors) -> Scenario:
    return validate(Scenario(hd_map, tuple(actors), Trajectory(sdv_states), name=name))


def toy_scenario(name: str) -> Scenario:
    """One of the six shipped attack scenes.

    In every scene the recorded SDV is more cautious than the planner under
    test (it slows down), which leaves room for plausible actor behaviours
    that the expert survives but a planner holding its speed does not.
    """
    w = LANE_WIDTH
    road = straight_road()
    sdv = speed_profile_states(0.0, 0.0, 10.0, accel=-1.0)
    if name == "lead_brake":
        actors = [_actor(1, speed_profile_states(15.0, 0.0, 10.0)),
                  _actor(2, speed_profile_states(-35.0, w, 9.0))]
    elif name == "cut_in_left":
        actors = [_actor(1, speed_profile_states(12.0, w, 9.0)),
                  _actor(2, speed_profile_states(45.0, 0.0, 11.0))]
    elif name == "cut_in_right":
        actors = [_actor(1, speed_profile_states(10.0, -w, 9.5)),
                  _actor(2, speed_profile_states(-30.0, 0.0, 9.0))]
    elif name == "fast_overtaker":
        actors = [_actor(1, speed_profile_states(-12.0, w, 13.0)),
                  _actor(2, speed_profile_states(40.0, -w, 8.0))]
    elif name == "slow_lead_left":
        actors = [_actor(1, speed_profile_states(18.0, w, 6.0)),
                  _actor(2, speed_profile_states(35.0, 0.0, 12.0))]
    elif name == "two_actor":
        actors = [_actor(1, speed_profile_states(16.0, -w, 8.0)),
                  _actor(2, speed_profile_states(28.0, 0.0, 10.0)),
                  _actor(3, speed_profile_states(-20.0, w, 10.0))]
    else:
        raise KeyError(f"unknown toy scenario {name!r}; choose from {TOY_SUITE}")
    return _scenario(name, road, sdv, actors)


def toy_suite() -> list[Scenario]:
    return [toy_scenario(n) for n in TOY_SUITE]


def occluding_bus_scenario() -> Scenario:
    """A stopped bus in the left lane hides a car that creeps out across the SDV lane.

    The car is already moving toward the road during the observed steps and
    keeps going; the expert brakes to a stop short of its path.
    """
    w = LANE_WIDTH
    road = straight_road()
    H = DEFAULT_N_HISTORY + DEFAULT_N_FUTURE
    now = DEFAULT_N_HISTORY - 1
    bus = np.tile([18.0, w, 0.0, 0.0, 0.0, 0.0], (H, 1))

    heading, speed = -0.6, 3.0
    t = (np.arange(H) - now) * DEFAULT_DT
    car = np.zeros((H, 6))
    car[:, 0] = 32.0 + speed * t * np.cos(heading)
    car[:, 1] = 5.0 + speed * t * np.sin(heading)
    car[:, 2] = heading
    car[:, 3] = speed

    sdv = speed_profile_states(0.0, 0.0, 10.0, accel=-2.0)
    actors = [_actor(1, bus, BUS, perturbable=False), _actor(2, car)]
    return _scenario("occluding_bus", road, sdv, actors)


def random_scenario(rng: np.random.Generator, n_actors: int | None = None, buildings: bool = True,
                    open_road: bool = False, max_tries: int = 200) -> Scenario:
    """Random constant-velocity traffic on a three-lane road.

    ``open_road`` keeps lane 0 ahead of the SDV clear so no actor is in the
    planner's way.
    """
    w = LANE_WIDTH
    road = straight_road(buildings=buildings)
    v_sdv = float(rng.uniform(6.0, 12.0))
    sdv = speed_profile_states(0.0, 0.0, v_sdv)
    if n_actors is None:
        n_actors = int(rng.integers(1, 5))
    for _ in range(max_tries):
        actors = []
        for i in range(n_actors):
            lane = int(rng.integers(-1, 2))
            if open_road and lane == 0:
                lane = int(rng.choice([-1, 1]))
            x = float(rng.uniform(-40.0, 60.0))
            v = float(rng.uniform(0.0, 14.0)) if not open_road else v_sdv
            actors.append(_actor(i + 1, speed_profile_states(x, lane * w, v)))
        try:
            return _scenario("random", road, sdv, actors)
        except ScenarioValidationError:
            continue
    raise RuntimeError("could not place non-colliding actors")


def boxed_in_scenario(gap: float = 0.1) -> Scenario:
    """A stationary car hemmed in by four stationary neighbours ``gap`` meters away."""
    w = LANE_WIDTH
    road = straight_road(buildings=False)
    sdv = speed_profile_states(-40.0, 0.0, 0.0)
    cx, cy = 20.0, 0.0
    L, W = CAR
    spots = [(cx + L + gap, cy), (cx - L - gap, cy), (cx, cy + W + gap), (cx, cy - W - gap)]
    actors = [_actor(1, speed_profile_states(cx, cy, 0.0))]
    actors += [_actor(i + 2, speed_profile_states(x, y, 0.0), perturbable=False) for i, (x, y) in enumerate(spots)]
    del w
    return _scenario("boxed_in", road, sdv, actors)


def overlaps_any(poses, dims, scenario: Scenario) -> bool:
    """Helper for tests: does a pose sequence hit any actor or the expert?"""
    hit = boxes_overlap(poses, dims, scenario.sdv_expert.poses, scenario.sdv_dims).any()
    for a in scenario.actors:
        hit |= boxes_overlap(poses, dims, a.trajectory.poses, a.dims).any()
    return bool(hit)


def data_path(name: str = ""):
    """Path inside the installed package data directory."""
    return resources.files("advscen") / "data" / name


def shipped_suite() -> list[Scenario]:
    """The toy suite as loaded from the YAML files shipped with the package."""
    return [load_scenario(data_path(f"toy_suite/{n}.yaml")) for n in TOY_SUITE]


def shipped_occluding_bus() -> Scenario:
    return load_scenario(data_path("toy_suite/occluding_bus.yaml"))


def write_suite(directory) -> list:
    """Regenerate the shipped YAML files from the builders above."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = [save_scenario(s, directory / f"{s.name}.yaml") for s in toy_suite()]
    paths.append(save_scenario(occluding_bus_scenario(), directory / "occluding_bus.yaml"))
    return paths
