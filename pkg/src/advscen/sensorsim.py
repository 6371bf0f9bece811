"""Planar single-ring LiDAR and range-image sweep editing.

Sweeps are edited rather than re-rendered: perturbed actors are cut out,
the holes they leave are filled from a cached background render, and the
actors are inserted at their new poses. Every merge is an element-wise
minimum over range images, which is also what carves the new shadows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import box_corners, points_in_box
from .kinematics import Trajectory
from .scenario import Scenario

DEFAULT_N_RAYS = 720
DEFAULT_MAX_RANGE = 100.0
BACKGROUND = -1
NO_RETURN = -2
_EPS_T = 1e-12
_BOX_EPS = 1e-6


@dataclass(frozen=True)
class RangeImage:
    """Nearest hit per ray; ``inf`` means no return.

    Ray ``i`` points along ``pose.theta + 2*pi*i/n_rays``. ``tags`` records
    what each ray hit: an actor id, ``BACKGROUND`` or ``NO_RETURN``.
    """

    ranges: np.ndarray
    tags: np.ndarray
    pose: tuple

    def __post_init__(self):
        r = np.array(self.ranges, dtype=float)
        t = np.array(self.tags, dtype=int)
        if r.shape != t.shape or r.ndim != 1:
            raise ValueError("ranges and tags must be equal-length vectors")
        if np.any(r <= 0) or np.any(np.isnan(r)):
            raise ValueError("ranges must be positive or inf")
        t = np.where(np.isinf(r), NO_RETURN, t)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "ranges", r)
        object.__setattr__(self, "tags", t)
        object.__setattr__(self, "pose", tuple(float(p) for p in self.pose))

    @property
    def n_rays(self) -> int:
        return len(self.ranges)

    @classmethod
    def empty(cls, n_rays: int, pose) -> "RangeImage":
        return cls(np.full(n_rays, np.inf), np.full(n_rays, NO_RETURN), pose)

    def angles(self, world: bool = False) -> np.ndarray:
        a = 2.0 * np.pi * np.arange(self.n_rays) / self.n_rays
        return a + self.pose[2] if world else a


@dataclass(frozen=True)
class Sweep:
    """Point cloud in the sensor frame with a source tag per point."""

    points: np.ndarray
    tags: np.ndarray
    pose: tuple
    n_rays: int = DEFAULT_N_RAYS
    frame: int = 0

    def __post_init__(self):
        p = np.array(self.points, dtype=float).reshape(-1, 2)
        t = np.array(self.tags, dtype=int).reshape(-1)
        if len(p) != len(t):
            raise ValueError("points and tags must have equal length")
        p.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "tags", t)
        object.__setattr__(self, "pose", tuple(float(v) for v in self.pose))

    def __len__(self) -> int:
        return len(self.points)

    def world_points(self) -> np.ndarray:
        x, y, th = self.pose
        c, s = np.cos(th), np.sin(th)
        p = self.points
        return np.stack([x + c * p[:, 0] - s * p[:, 1], y + s * p[:, 0] + c * p[:, 1]], axis=1)

    def count(self, tag: int) -> int:
        return int(np.count_nonzero(self.tags == tag))


@dataclass(frozen=True)
class SceneGeometry:
    """Static polygons plus actor boxes at one instant."""

    obstacles: tuple = ()
    boxes: tuple = ()  # (pose (3,), dims (2,), tag)

    def edges(self):
        segs, tags = [], []
        for poly in self.obstacles:
            p = np.asarray(poly, dtype=float)
            if len(p) < 3:
                raise ValueError("obstacle polygons need >= 3 vertices")
            segs.append(np.stack([p, np.roll(p, -1, axis=0)], axis=1))
            tags.append(np.full(len(p), BACKGROUND))
        for pose, dims, tag in self.boxes:
            c = box_corners(pose, dims)
            segs.append(np.stack([c, np.roll(c, -1, axis=0)], axis=1))
            tags.append(np.full(4, int(tag)))
        if not segs:
            return np.zeros((0, 2, 2)), np.zeros(0, dtype=int)
        return np.concatenate(segs), np.concatenate(tags)

    def __add__(self, other: "SceneGeometry") -> "SceneGeometry":
        return SceneGeometry(tuple(self.obstacles) + tuple(other.obstacles), tuple(self.boxes) + tuple(other.boxes))


def raycast(geometry: SceneGeometry, pose, n_rays: int = DEFAULT_N_RAYS, max_range: float = DEFAULT_MAX_RANGE) -> RangeImage:
    """Nearest intersection of each ray with the scene edges."""
    pose = tuple(float(p) for p in pose)
    segs, seg_tags = geometry.edges()
    if len(segs) == 0:
        return RangeImage.empty(n_rays, pose)
    phi = pose[2] + 2.0 * np.pi * np.arange(n_rays) / n_rays
    d = np.stack([np.cos(phi), np.sin(phi)], axis=1)  # (R, 2)
    p = segs[:, 0] - np.array(pose[:2])  # (E, 2)
    e = segs[:, 1] - segs[:, 0]
    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]  # (R, E)
    num_t = p[None, :, 0] * e[None, :, 1] - p[None, :, 1] * e[None, :, 0]
    num_u = p[None, :, 0] * d[:, None, 1] - p[None, :, 1] * d[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num_t / denom
        u = num_u / denom
    valid = (denom != 0.0) & (t > _EPS_T) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    # ties between edges at the same range resolve to the lowest tag
    order = np.lexsort((seg_tags,))
    t_sorted = t[:, order]
    k = np.argmin(t_sorted, axis=1)
    ranges = t_sorted[np.arange(n_rays), k]
    tags = seg_tags[order][k]
    ranges = np.where(ranges > max_range, np.inf, ranges)
    return RangeImage(ranges, tags, pose)


def merge_min(a: RangeImage, b: RangeImage) -> RangeImage:
    """Element-wise minimum of two range images taken from the same pose."""
    if a.n_rays != b.n_rays:
        raise ValueError(f"ray count mismatch: {a.n_rays} vs {b.n_rays}")
    if not np.allclose(a.pose, b.pose, rtol=0.0, atol=1e-12):
        raise ValueError(f"pose mismatch: {a.pose} vs {b.pose}")
    take_b = (b.ranges < a.ranges) | ((b.ranges == a.ranges) & (b.tags < a.tags))
    return RangeImage(np.where(take_b, b.ranges, a.ranges), np.where(take_b, b.tags, a.tags), a.pose)


def to_sweep(image: RangeImage, frame: int = 0) -> Sweep:
    hit = np.isfinite(image.ranges)
    a = image.angles()[hit]
    r = image.ranges[hit]
    pts = np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
    return Sweep(pts, image.tags[hit], image.pose, image.n_rays, frame)


def to_range_image(sweep: Sweep) -> RangeImage:
    """Bin points to their nearest ray; the closest point wins a shared bin."""
    ranges = np.full(sweep.n_rays, np.inf)
    tags = np.full(sweep.n_rays, NO_RETURN)
    if len(sweep):
        res = 2.0 * np.pi / sweep.n_rays
        ang = np.arctan2(sweep.points[:, 1], sweep.points[:, 0])
        idx = np.rint(ang / res).astype(int) % sweep.n_rays
        r = np.hypot(sweep.points[:, 0], sweep.points[:, 1])
        order = np.lexsort((sweep.tags, r, idx))
        bins, first = np.unique(idx[order], return_index=True)
        ranges[bins] = r[order][first]
        tags[bins] = sweep.tags[order][first]
    return RangeImage(ranges, tags, sweep.pose)


def _inside_any(world_pts, boxes) -> np.ndarray:
    inside = np.zeros(len(world_pts), dtype=bool)
    for pose, dims, *_ in boxes:
        inside |= points_in_box(world_pts, np.asarray(pose, dtype=float), np.asarray(dims, dtype=float), _BOX_EPS)
    return inside


def remove_actors(sweep: Sweep, boxes, background, max_range: float = DEFAULT_MAX_RANGE) -> Sweep:
    """Cut out points inside ``boxes`` and refill exactly those rays from ``background``.

    ``background`` is either a :class:`SceneGeometry` (rendered from the
    sweep pose) or a precomputed :class:`RangeImage` from the same pose.
    """
    if not boxes or not len(sweep):
        return sweep
    inside = _inside_any(sweep.world_points(), boxes)
    if not np.any(inside):
        return sweep
    kept = Sweep(sweep.points[~inside], sweep.tags[~inside], sweep.pose, sweep.n_rays, sweep.frame)
    removed_rays = to_range_image(Sweep(sweep.points[inside], sweep.tags[inside], sweep.pose, sweep.n_rays)).ranges
    holes = np.isfinite(removed_rays)
    if isinstance(background, SceneGeometry):
        background = raycast(background, sweep.pose, sweep.n_rays, max_range)
    fill = RangeImage(
        np.where(holes, background.ranges, np.inf), np.where(holes, background.tags, NO_RETURN), sweep.pose
    )
    return to_sweep(merge_min(to_range_image(kept), fill), sweep.frame)


def add_actors(sweep: Sweep, actors, max_range: float = DEFAULT_MAX_RANGE) -> Sweep:
    """Insert actor boxes ``(pose, dims, tag)``; rays they block lose what lay behind."""
    if not actors:
        return sweep
    rendered = raycast(SceneGeometry(boxes=tuple(actors)), sweep.pose, sweep.n_rays, max_range)
    return to_sweep(merge_min(to_range_image(sweep), rendered), sweep.frame)


def _boxes_at(scenario: Scenario, t: int, trajectories: dict | None = None, only=None, exclude=()):
    boxes = []
    for a in scenario.actors:
        if a.id in exclude or (only is not None and a.id not in only):
            continue
        traj = trajectories.get(a.id, a.trajectory) if trajectories else a.trajectory
        boxes.append((np.asarray(getattr(traj, "states", traj))[t, :3], a.dims, a.id))
    return tuple(boxes)


def scene_geometry(scenario: Scenario, t: int, trajectories: dict | None = None, exclude=()) -> SceneGeometry:
    return SceneGeometry(scenario.map.obstacles, _boxes_at(scenario, t, trajectories, exclude=exclude))


def sensor_pose(scenario: Scenario, t: int) -> tuple:
    return tuple(scenario.sdv_expert.states[t, :3])


def render(scenario: Scenario, trajectories: dict | None = None, n_rays: int = DEFAULT_N_RAYS,
           max_range: float = DEFAULT_MAX_RANGE) -> list[Sweep]:
    """From-scratch raycast of every observation frame."""
    return [
        to_sweep(raycast(scene_geometry(scenario, t, trajectories), sensor_pose(scenario, t), n_rays, max_range), t)
        for t in range(scenario.n_history)
    ]


@dataclass
class LidarSimulator:
    """Edits the observation sweeps of one scenario for perturbed actors.

    The original sweeps and the static-background renders are computed once
    and reused across queries; the SDV pose never changes during an attack.
    """

    scenario: Scenario
    n_rays: int = DEFAULT_N_RAYS
    max_range: float = DEFAULT_MAX_RANGE
    dropout: float = 0.0
    seed: int = 0
    _original: list = field(default=None, init=False, repr=False)
    _static: list = field(default=None, init=False, repr=False)

    def original_sweeps(self) -> list[Sweep]:
        if self._original is None:
            sweeps = render(self.scenario, None, self.n_rays, self.max_range)
            if self.dropout > 0:
                rng = np.random.default_rng(self.seed)
                dropped = []
                for sw in sweeps:
                    img = to_range_image(sw)
                    drop = rng.random(self.n_rays) < self.dropout
                    img = RangeImage(np.where(drop, np.inf, img.ranges), img.tags, img.pose)
                    dropped.append(to_sweep(img, sw.frame))
                sweeps = dropped
            self._original = sweeps
        return self._original

    def static_background(self, t: int) -> RangeImage:
        if self._static is None:
            self._static = [
                raycast(SceneGeometry(self.scenario.map.obstacles), sensor_pose(self.scenario, k), self.n_rays, self.max_range)
                for k in range(self.scenario.n_history)
            ]
        return self._static[t]

    def simulate(self, perturbed: dict) -> list[Sweep]:
        """Observation sweeps after moving the actors in ``perturbed`` (id -> Trajectory)."""
        s = self.scenario
        unknown = set(perturbed) - {a.id for a in s.actors}
        if unknown:
            raise KeyError(f"perturbed actors not in scenario: {sorted(unknown)}")
        perturbed = {k: v if isinstance(v, Trajectory) else Trajectory(v) for k, v in perturbed.items()}
        sweeps = self.original_sweeps()
        if not perturbed:
            return list(sweeps)
        ids = set(perturbed)
        out = []
        for t, sweep in enumerate(sweeps):
            pose = sensor_pose(s, t)
            old_boxes = _boxes_at(s, t, only=ids)
            remaining = raycast(SceneGeometry(boxes=_boxes_at(s, t, exclude=ids)), pose, self.n_rays, self.max_range)
            background = merge_min(self.static_background(t), remaining)
            edited = remove_actors(sweep, old_boxes, background, self.max_range)
            new_boxes = tuple((perturbed[a].states[t, :3], s.actor(a).dims, a) for a in sorted(ids))
            out.append(add_actors(edited, new_boxes, self.max_range))
        return out


def simulate(scenario: Scenario, perturbed: dict, n_rays: int = DEFAULT_N_RAYS,
             max_range: float = DEFAULT_MAX_RANGE) -> list[Sweep]:
    return LidarSimulator(scenario, n_rays, max_range).simulate(perturbed)


# columnar text format ------------------------------------------------------


def dump_sweep(sweep: Sweep, path) -> Path:
    """Write ``angle range tag`` rows, one per ray that returned."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    img = to_range_image(sweep)
    hit = np.isfinite(img.ranges)
    header = (
        f"frame={sweep.frame} n_rays={sweep.n_rays} "
        f"pose={sweep.pose[0]!r},{sweep.pose[1]!r},{sweep.pose[2]!r}\nangle range tag"
    )
    rows = np.column_stack([img.angles()[hit], img.ranges[hit], img.tags[hit]])
    np.savetxt(path, rows, fmt=["%.17g", "%.17g", "%d"], header=header)
    return path


def load_sweep(path) -> Sweep:
    path = Path(path)
    with open(path) as fh:
        meta = dict(kv.split("=", 1) for kv in fh.readline().lstrip("# ").split())
    rows = np.loadtxt(path, ndmin=2)
    pose = tuple(float(v) for v in meta["pose"].split(","))
    n_rays = int(meta["n_rays"])
    if len(rows) == 0:
        return Sweep(np.zeros((0, 2)), np.zeros(0, dtype=int), pose, n_rays, int(meta["frame"]))
    a, r = rows[:, 0], rows[:, 1]
    pts = np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
    return Sweep(pts, rows[:, 2].astype(int), pose, n_rays, int(meta["frame"]))
