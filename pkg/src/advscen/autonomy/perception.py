"""Cluster-based detection and constant-velocity forecasting.

Detection works on whatever the sweep shows: an actor with fewer than
``min_points`` returns, e.g. because something taller stands in front of
it, is simply not seen. That is the path through which occlusion turns
into planning failures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..sensorsim import BACKGROUND, Sweep

CLUSTER_DISTANCE = 0.7
MIN_POINTS = 5
SIZE_PRIOR = (4.5, 2.0)
ASSOCIATION_GATE = 3.0
_HEADING_GRID = np.deg2rad(np.arange(0.0, 90.0, 0.5))


@dataclass(frozen=True)
class Detection:
    center: tuple  # world frame
    heading: float
    half_extent: tuple  # (half length, half width)
    n_points: int
    local_center: tuple | None = None  # sensor frame, used for association

    @property
    def association_point(self) -> np.ndarray:
        return np.asarray(self.center if self.local_center is None else self.local_center)

    @property
    def dims(self) -> np.ndarray:
        return 2.0 * np.asarray(self.half_extent)


@dataclass(frozen=True)
class PredictedActor:
    center: tuple
    velocity: tuple
    heading: float
    dims: tuple
    poses: np.ndarray  # (n_future, 3), steps 1..n_future


def cluster_points(points, threshold: float = CLUSTER_DISTANCE) -> list[np.ndarray]:
    """Single-linkage clusters as index arrays, ordered by first point index."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n == 0:
        return []
    pairs = cKDTree(points).query_pairs(threshold, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    return sorted((np.array(g) for g in groups.values()), key=lambda g: g[0])


def fit_box(points, sensor_xy, size_prior=SIZE_PRIOR):
    """Oriented box around visible returns, completed away from the sensor.

    Heading is the orientation that puts the returns closest to the edges of
    their bounding rectangle (an L-shape of two faces scores zero only when
    aligned with the faces), with area as tie-break. A side that is seen
    shorter than the prior is grown on the far side, since LiDAR only sees
    the faces turned toward it.

    Returns ``(center (2,), heading, half_extent (2,))``.
    """
    pts = np.asarray(points, dtype=float)
    c, s = np.cos(_HEADING_GRID), np.sin(_HEADING_GRID)
    p1 = pts[:, :1] * c + pts[:, 1:] * s
    p2 = -pts[:, :1] * s + pts[:, 1:] * c
    e1 = p1.max(0) - p1.min(0)
    e2 = p2.max(0) - p2.min(0)
    d1 = np.minimum(p1 - p1.min(0), p1.max(0) - p1)
    d2 = np.minimum(p2 - p2.min(0), p2.max(0) - p2)
    closeness = np.mean(np.minimum(d1, d2), axis=0)
    k = int(np.argmin(closeness + 1e-3 * (e1 + 0.05) * (e2 + 0.05)))
    axes = np.array([[c[k], s[k]], [-s[k], c[k]]])
    lo = np.array([p1[:, k].min(), p2[:, k].min()])
    hi = np.array([p1[:, k].max(), p2[:, k].max()])
    ext = hi - lo
    prior_len, prior_wid = size_prior

    if ext.max() > prior_wid + 0.3:
        length_axis = int(np.argmax(ext))
    else:
        # only a short face is visible: treat it as the width face
        length_axis = int(np.argmin(ext))
    need = np.empty(2)
    need[length_axis] = prior_len
    need[1 - length_axis] = prior_wid
    sensor = axes @ np.asarray(sensor_xy, dtype=float)
    for i in range(2):
        if ext[i] >= need[i]:
            continue
        if sensor[i] <= lo[i]:
            hi[i] = lo[i] + need[i]
        elif sensor[i] >= hi[i]:
            lo[i] = hi[i] - need[i]
        else:
            mid = 0.5 * (lo[i] + hi[i])
            lo[i], hi[i] = mid - need[i] / 2, mid + need[i] / 2
    mid = 0.5 * (lo + hi)
    center = axes.T @ mid
    heading = float(np.arctan2(axes[length_axis, 1], axes[length_axis, 0]))
    half = 0.5 * (hi - lo)
    return center, heading, (float(half[length_axis]), float(half[1 - length_axis]))


def _to_sensor_frame(xy, pose) -> np.ndarray:
    c, s = np.cos(pose[2]), np.sin(pose[2])
    d = np.asarray(xy, dtype=float) - np.asarray(pose[:2], dtype=float)
    return np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1]])


def detect(sweep: Sweep, cluster_distance: float = CLUSTER_DISTANCE, min_points: int = MIN_POINTS,
           size_prior=SIZE_PRIOR) -> list[Detection]:
    """Cluster the non-background returns of a sweep into oriented boxes (world frame)."""
    mask = sweep.tags != BACKGROUND
    if not np.any(mask):
        return []
    pts = sweep.world_points()[mask]
    out = []
    for idx in cluster_points(pts, cluster_distance):
        if len(idx) < min_points:
            continue
        center, heading, half = fit_box(pts[idx], sweep.pose[:2], size_prior)
        local = _to_sensor_frame(center, sweep.pose)
        out.append(Detection((float(center[0]), float(center[1])), heading, half, int(len(idx)),
                             (float(local[0]), float(local[1]))))
    return out


def associate(prev: list[Detection], curr: list[Detection], gate: float = ASSOCIATION_GATE) -> dict:
    """Greedy nearest-neighbour matching ``curr index -> prev index`` within ``gate``.

    Distances are measured in the sensor frame of each sweep, so traffic
    moving with the SDV stays put between frames and a 3 m gate is enough at
    highway speeds.
    """
    if not prev or not curr:
        return {}
    a = np.array([d.association_point for d in curr])
    b = np.array([d.association_point for d in prev])
    dist = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    pairs = sorted((dist[i, j], i, j) for i in range(len(a)) for j in range(len(b)) if dist[i, j] <= gate)
    match, used = {}, set()
    for _, i, j in pairs:
        if i in match or j in used:
            continue
        match[i] = j
        used.add(j)
    return match


def forecast(frames: list[list[Detection]], dt: float, n_future: int, gate: float = ASSOCIATION_GATE) -> list[PredictedActor]:
    """Constant-velocity futures for the detections of the latest frame."""
    if len(frames) < 2:
        raise ValueError("forecasting needs at least two frames")
    curr, prev = frames[-1], frames[-2]
    match = associate(prev, curr, gate)
    steps = np.arange(1, n_future + 1, dtype=float) * dt
    out = []
    for i, det in enumerate(curr):
        c = np.asarray(det.center)
        if i in match:
            vel = (c - np.asarray(prev[match[i]].center)) / dt
        else:
            vel = np.zeros(2)
        speed = float(np.hypot(*vel))
        if speed > 0.5:
            heading = float(np.arctan2(vel[1], vel[0]))
        else:
            heading = det.heading
        xy = c[None] + steps[:, None] * vel[None]
        poses = np.column_stack([xy, np.full(n_future, heading)])
        out.append(PredictedActor((float(c[0]), float(c[1])), (float(vel[0]), float(vel[1])), heading,
                                  tuple(det.dims.tolist()), poses))
    return out
