"""Planar geometry on oriented rectangles and lane polylines.

Poses are ``(x, y, theta)`` triples and footprints are ``(length, width)``
pairs; every routine broadcasts over leading axes so that thousands of
candidate trajectories can be checked against the scene in one call.
"""

from __future__ import annotations

import numpy as np


def box_corners(pose, dims):
    """Return corners of oriented rectangles, counter-clockwise.

    Parameters
    ----------
    pose : array-like of shape (..., 3)
    dims : array-like of shape (..., 2)

    Returns
    -------
    ndarray of shape (..., 4, 2)
    """
    pose = np.asarray(pose, dtype=float)
    dims = np.asarray(dims, dtype=float)
    c, s = np.cos(pose[..., 2]), np.sin(pose[..., 2])
    hl, hw = dims[..., 0] / 2.0, dims[..., 1] / 2.0
    local = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
    lx = local[:, 0] * hl[..., None]
    ly = local[:, 1] * hw[..., None]
    x = pose[..., 0, None] + c[..., None] * lx - s[..., None] * ly
    y = pose[..., 1, None] + s[..., None] * lx + c[..., None] * ly
    return np.stack([x, y], axis=-1)


def boxes_overlap(pose_a, dims_a, pose_b, dims_b):
    """Separating-axis test between oriented rectangles, broadcast.

    Touching boundaries count as overlap. Shapes of the inputs broadcast
    against each other the numpy way; the result drops the trailing
    coordinate axis.
    """
    pose_a = np.asarray(pose_a, dtype=float)
    pose_b = np.asarray(pose_b, dtype=float)
    dims_a = np.asarray(dims_a, dtype=float)
    dims_b = np.asarray(dims_b, dtype=float)

    ca, sa = np.cos(pose_a[..., 2]), np.sin(pose_a[..., 2])
    cb, sb = np.cos(pose_b[..., 2]), np.sin(pose_b[..., 2])
    dx = pose_b[..., 0] - pose_a[..., 0]
    dy = pose_b[..., 1] - pose_a[..., 1]
    hla, hwa = dims_a[..., 0] / 2.0, dims_a[..., 1] / 2.0
    hlb, hwb = dims_b[..., 0] / 2.0, dims_b[..., 1] / 2.0

    # cosines between the axes of a and b
    uu = np.abs(ca * cb + sa * sb)  # u_a . u_b == v_a . v_b
    uv = np.abs(-ca * sb + sa * cb)  # u_a . v_b == v_a . u_b (abs)

    sep = np.abs(dx * ca + dy * sa) > hla + hlb * uu + hwb * uv
    sep |= np.abs(-dx * sa + dy * ca) > hwa + hlb * uv + hwb * uu
    sep |= np.abs(dx * cb + dy * sb) > hlb + hla * uu + hwa * uv
    sep |= np.abs(-dx * sb + dy * cb) > hwb + hla * uv + hwa * uu
    return ~sep


def polygon_overlap(a, b) -> bool:
    """True iff two oriented rectangles intersect.

    ``a`` and ``b`` are ``(length, width, x, y, theta)`` tuples.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("polygon_overlap requires finite poses and sizes")
    return bool(boxes_overlap(a[2:5], a[0:2], b[2:5], b[0:2]))


def points_in_box(points, pose, dims, eps: float = 0.0):
    """Mask of points lying inside (or within ``eps`` of) an oriented box."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    c, s = np.cos(pose[2]), np.sin(pose[2])
    d = points - np.asarray(pose[:2], dtype=float)
    lon = d[:, 0] * c + d[:, 1] * s
    lat = -d[:, 0] * s + d[:, 1] * c
    return (np.abs(lon) <= dims[0] / 2.0 + eps) & (np.abs(lat) <= dims[1] / 2.0 + eps)


def project_to_polyline(points, polyline):
    """Project points onto a polyline.

    Returns
    -------
    station : ndarray (N,)
        Arc length of the closest point along the polyline.
    offset : ndarray (N,)
        Signed lateral offset, positive to the left of travel direction.
    distance : ndarray (N,)
        Unsigned distance to the polyline.
    heading : ndarray (N,)
        Heading of the closest segment.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    line = np.asarray(polyline, dtype=float)
    a = line[:-1]
    seg = line[1:] - a
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])[:-1]

    rel = pts[:, None, :] - a[None, :, :]
    t = np.einsum("nkd,kd->nk", rel, seg) / (seg_len**2)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None] + t[..., None] * seg[None]
    diff = pts[:, None, :] - closest
    dist = np.hypot(diff[..., 0], diff[..., 1])
    k = np.argmin(dist, axis=1)
    idx = np.arange(len(pts))
    seg_k = seg[k]
    cross = seg_k[:, 0] * rel[idx, k, 1] - seg_k[:, 1] * rel[idx, k, 0]
    sign = np.where(cross >= 0.0, 1.0, -1.0)
    station = cum[k] + t[idx, k] * seg_len[k]
    heading = np.arctan2(seg_k[:, 1], seg_k[:, 0])
    return station, sign * dist[idx, k], dist[idx, k], heading


def polyline_point(polyline, station):
    """Point and heading at arc length ``station`` (extrapolated past the ends)."""
    line = np.asarray(polyline, dtype=float)
    station = np.asarray(station, dtype=float)
    seg = line[1:] - line[:-1]
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    k = np.clip(np.searchsorted(cum, station, side="right") - 1, 0, len(seg) - 1)
    t = (station - cum[k]) / seg_len[k]
    xy = line[k] + t[..., None] * seg[k]
    heading = np.arctan2(seg[k, 1], seg[k, 0])
    return xy, heading


def wrap_angle(theta):
    return (np.asarray(theta) + np.pi) % (2.0 * np.pi) - np.pi


def rigid_transform(xy, theta, rotation: float, translation=(0.0, 0.0)):
    """Rotate ``xy`` about the origin then translate; headings rotate along."""
    c, s = np.cos(rotation), np.sin(rotation)
    xy = np.asarray(xy, dtype=float)
    out = np.empty_like(xy)
    out[..., 0] = c * xy[..., 0] - s * xy[..., 1] + translation[0]
    out[..., 1] = s * xy[..., 0] + c * xy[..., 1] + translation[1]
    return out, np.asarray(theta, dtype=float) + rotation
