"""Scenario domain types and the YAML scenario file format.

A scenario file is one YAML document::

    version: 1
    dt: 0.5
    n_history: 2
    n_future: 10
    map:
      lanes:
        - {id: 0, width: 3.5, centerline: [[x, y], ...]}
      obstacles:                # optional static polygons
        - [[x, y], [x, y], ...]
    sdv_expert:
      length: 4.5
      width: 2.0
      states: [[x, y, theta, v, kappa, a], ...]
    actors:
      - {id: 1, length: 4.5, width: 2.0, perturbable: true, states: [...]}

Angles are radians, distances meters, speeds m/s. Every trajectory holds
exactly ``n_history + n_future`` states.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .geometry import boxes_overlap, project_to_polyline
from .kinematics import Trajectory

FORMAT_VERSION = 1
DEFAULT_DT = 0.5
DEFAULT_N_HISTORY = 2
DEFAULT_N_FUTURE = 10
SDV_LENGTH = 4.5
SDV_WIDTH = 2.0


class ScenarioFormatError(ValueError):
    """The file does not follow the scenario schema."""


class ScenarioValidationError(ValueError):
    """The scenario parses but violates a domain invariant."""


@dataclass(frozen=True)
class Lane:
    id: int
    centerline: np.ndarray
    width: float

    def __post_init__(self):
        line = np.array(self.centerline, dtype=float)
        if line.ndim != 2 or line.shape[1] != 2 or len(line) < 2:
            raise ScenarioValidationError(f"lane {self.id}: centerline needs >= 2 points")
        if not self.width > 0:
            raise ScenarioValidationError(f"lane {self.id}: width must be positive")
        line.setflags(write=False)
        object.__setattr__(self, "centerline", line)

    def __eq__(self, other):
        return (
            isinstance(other, Lane)
            and self.id == other.id
            and self.width == other.width
            and np.array_equal(self.centerline, other.centerline)
        )


@dataclass(frozen=True)
class HDMap:
    lanes: tuple[Lane, ...]
    obstacles: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lanes", tuple(self.lanes))
        polys = []
        for i, poly in enumerate(self.obstacles):
            p = np.array(poly, dtype=float)
            if p.ndim != 2 or p.shape[1] != 2 or len(p) < 3:
                raise ScenarioValidationError(f"obstacle {i}: polygon needs >= 3 vertices")
            p.setflags(write=False)
            polys.append(p)
        object.__setattr__(self, "obstacles", tuple(polys))

    def __eq__(self, other):
        return (
            isinstance(other, HDMap)
            and self.lanes == other.lanes
            and len(self.obstacles) == len(other.obstacles)
            and all(np.array_equal(a, b) for a, b in zip(self.obstacles, other.obstacles))
        )

    def lateral_clearance(self, xy) -> np.ndarray:
        """Per point, the best margin ``width/2 - |offset|`` over all lanes."""
        pts = np.asarray(xy, dtype=float).reshape(-1, 2)
        if not self.lanes:
            return np.full(len(pts), -np.inf)
        best = np.full(len(pts), -np.inf)
        for lane in self.lanes:
            _, _, dist, _ = project_to_polyline(pts, lane.centerline)
            best = np.maximum(best, lane.width / 2.0 - dist)
        return best

    def on_road(self, xy) -> np.ndarray:
        """A center point is on-road iff it is within half a lane width of some centerline."""
        return self.lateral_clearance(xy) >= 0.0

    def nearest_lane(self, xy) -> Lane:
        pt = np.asarray(xy, dtype=float).reshape(1, 2)
        dists = [project_to_polyline(pt, lane.centerline)[2][0] for lane in self.lanes]
        return self.lanes[int(np.argmin(dists))]


@dataclass(frozen=True)
class Actor:
    id: int
    length: float
    width: float
    trajectory: Trajectory
    perturbable: bool = True

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ScenarioValidationError(f"actor {self.id}: footprint must be positive")
        if not isinstance(self.trajectory, Trajectory):
            object.__setattr__(self, "trajectory", Trajectory(self.trajectory))

    @property
    def dims(self) -> np.ndarray:
        return np.array([self.length, self.width])


@dataclass(frozen=True)
class Scenario:
    map: HDMap
    actors: tuple[Actor, ...]
    sdv_expert: Trajectory
    dt: float = DEFAULT_DT
    n_history: int = DEFAULT_N_HISTORY
    n_future: int = DEFAULT_N_FUTURE
    sdv_length: float = SDV_LENGTH
    sdv_width: float = SDV_WIDTH
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "actors", tuple(self.actors))
        if not isinstance(self.sdv_expert, Trajectory):
            object.__setattr__(self, "sdv_expert", Trajectory(self.sdv_expert))

    @property
    def horizon(self) -> int:
        return self.n_history + self.n_future

    @property
    def current_index(self) -> int:
        return self.n_history - 1

    @property
    def sdv_dims(self) -> np.ndarray:
        return np.array([self.sdv_length, self.sdv_width])

    def actor(self, actor_id: int) -> Actor:
        for a in self.actors:
            if a.id == actor_id:
                return a
        raise KeyError(f"no actor with id {actor_id}")

    def with_trajectories(self, trajectories: dict) -> "Scenario":
        """Copy with some actor trajectories replaced."""
        actors = tuple(
            replace(a, trajectory=trajectories[a.id]) if a.id in trajectories else a for a in self.actors
        )
        return replace(self, actors=actors)

    def actor_poses(self) -> np.ndarray:
        """``(M, H, 3)`` poses of every actor."""
        if not self.actors:
            return np.zeros((0, self.horizon, 3))
        return np.stack([a.trajectory.poses for a in self.actors])

    def actor_dims(self) -> np.ndarray:
        if not self.actors:
            return np.zeros((0, 2))
        return np.stack([a.dims for a in self.actors])

    def digest(self) -> str:
        """Content hash, stable across runs."""
        return hashlib.sha256(yaml.safe_dump(to_dict(self), sort_keys=True).encode()).hexdigest()[:16]


def validate(scenario: Scenario, check_collisions: bool = True) -> Scenario:
    """Raise :class:`ScenarioValidationError` on any invariant violation."""
    s = scenario
    if not s.dt > 0:
        raise ScenarioValidationError("dt must be positive")
    if s.n_history < 1 or s.n_future < 1:
        raise ScenarioValidationError("n_history and n_future must be >= 1")
    if not (s.sdv_length > 0 and s.sdv_width > 0):
        raise ScenarioValidationError("sdv footprint must be positive")
    if len(s.sdv_expert) != s.horizon:
        raise ScenarioValidationError(
            f"state count mismatch: sdv_expert has {len(s.sdv_expert)} states, expected {s.horizon}"
        )
    seen = set()
    for a in s.actors:
        if a.id in seen:
            raise ScenarioValidationError(f"duplicate actor id {a.id}")
        seen.add(a.id)
        if len(a.trajectory) != s.horizon:
            raise ScenarioValidationError(
                f"state count mismatch: actor {a.id} has {len(a.trajectory)} states, expected {s.horizon}"
            )
    if check_collisions and s.actors:
        poses, dims = s.actor_poses(), s.actor_dims()
        hit = boxes_overlap(poses, dims[:, None, :], s.sdv_expert.poses[None], s.sdv_dims)
        if np.any(hit):
            i, t = np.argwhere(hit)[0]
            raise ScenarioValidationError(f"actor {s.actors[i].id} collides with sdv_expert at step {t}")
        pair = boxes_overlap(poses[:, None], dims[:, None, None], poses[None], dims[None, :, None])
        m = len(s.actors)
        pair[np.arange(m), np.arange(m)] = False
        if np.any(pair):
            i, j, t = np.argwhere(pair)[0]
            raise ScenarioValidationError(
                f"actors {s.actors[i].id} and {s.actors[j].id} collide at step {t}"
            )
    return scenario


# serialization -------------------------------------------------------------


def _floats(arr) -> list:
    return np.asarray(arr, dtype=float).tolist()


def to_dict(s: Scenario) -> dict:
    return {
        "version": FORMAT_VERSION,
        "name": s.name,
        "dt": float(s.dt),
        "n_history": int(s.n_history),
        "n_future": int(s.n_future),
        "map": {
            "lanes": [
                {"id": int(lane.id), "width": float(lane.width), "centerline": _floats(lane.centerline)}
                for lane in s.map.lanes
            ],
            "obstacles": [_floats(p) for p in s.map.obstacles],
        },
        "sdv_expert": {
            "length": float(s.sdv_length),
            "width": float(s.sdv_width),
            "states": _floats(s.sdv_expert.states),
        },
        "actors": [
            {
                "id": int(a.id),
                "length": float(a.length),
                "width": float(a.width),
                "perturbable": bool(a.perturbable),
                "states": _floats(a.trajectory.states),
            }
            for a in s.actors
        ],
    }


def _require(mapping, key, where, kind=None):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ScenarioFormatError(f"missing field '{where}{key}'")
    value = mapping[key]
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool)):
        raise ScenarioFormatError(f"field '{where}{key}' has wrong type {type(value).__name__}")
    return value


def _states(raw, where) -> Trajectory:
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"field '{where}' is not a numeric array") from exc
    if arr.ndim != 2 or arr.shape[1] != 6:
        raise ScenarioFormatError(f"field '{where}' must be a list of [x, y, theta, v, kappa, a] rows")
    if not np.all(np.isfinite(arr)):
        raise ScenarioValidationError(f"field '{where}' contains non-finite values")
    return Trajectory(arr)


def from_dict(doc: dict, check_collisions: bool = True) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario document must be a mapping")
    version = _require(doc, "version", "", int)
    if version != FORMAT_VERSION:
        raise ScenarioFormatError(f"field 'version' must be {FORMAT_VERSION}, got {version}")
    dt = float(_require(doc, "dt", "", (int, float)))
    n_history = _require(doc, "n_history", "", int)
    n_future = _require(doc, "n_future", "", int)

    raw_map = _require(doc, "map", "", dict)
    lanes = []
    for i, raw in enumerate(_require(raw_map, "lanes", "map.", list)):
        where = f"map.lanes[{i}]."
        lanes.append(
            Lane(
                id=_require(raw, "id", where, int),
                width=float(_require(raw, "width", where, (int, float))),
                centerline=np.array(_require(raw, "centerline", where, list), dtype=float),
            )
        )
    obstacles = raw_map.get("obstacles") or []
    hd_map = HDMap(tuple(lanes), tuple(np.array(p, dtype=float) for p in obstacles))

    raw_sdv = _require(doc, "sdv_expert", "", dict)
    sdv = _states(_require(raw_sdv, "states", "sdv_expert.", list), "sdv_expert.states")

    actors = []
    for i, raw in enumerate(_require(doc, "actors", "", list)):
        where = f"actors[{i}]."
        actors.append(
            Actor(
                id=_require(raw, "id", where, int),
                length=float(_require(raw, "length", where, (int, float))),
                width=float(_require(raw, "width", where, (int, float))),
                perturbable=bool(raw.get("perturbable", True)),
                trajectory=_states(_require(raw, "states", where, list), where + "states"),
            )
        )
    scenario = Scenario(
        map=hd_map,
        actors=tuple(actors),
        sdv_expert=sdv,
        dt=dt,
        n_history=n_history,
        n_future=n_future,
        sdv_length=float(raw_sdv.get("length", SDV_LENGTH)),
        sdv_width=float(raw_sdv.get("width", SDV_WIDTH)),
        name=str(doc.get("name", "")),
    )
    return validate(scenario, check_collisions=check_collisions)


def load_scenario(path, check_collisions: bool = True) -> Scenario:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioFormatError(f"{path}: not valid YAML: {exc}") from exc
    scenario = from_dict(doc, check_collisions=check_collisions)
    if not scenario.name:
        scenario = replace(scenario, name=path.stem)
    return scenario


def save_scenario(scenario: Scenario, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(to_dict(scenario), sort_keys=False, default_flow_style=None))
    return path
