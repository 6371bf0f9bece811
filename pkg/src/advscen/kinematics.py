"""Kinematic bicycle model, physical bounds and the normalized perturbation.

A state row is ``[x, y, theta, v, kappa, a]``. The perturbation vector
``delta`` lives in ``[-1, 1]^(4 + 2T)``: offsets of the initial
``(x, y, theta, v)`` followed by ``(a_t, kappa_dot_t)`` for every step.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import yaml

STATE_FIELDS = ("x", "y", "theta", "v", "kappa", "a")
X, Y, THETA, V, KAPPA, A = range(6)
N_INITIAL = 4


@dataclass(frozen=True)
class PhysicalBounds:
    """Limits on the bicycle model and on initial-state perturbations."""

    max_curvature: float = 0.2
    max_curvature_rate: float = 0.05
    max_acceleration: float = 2.0
    max_lateral_acceleration: float = 3.0
    max_speed: float = 15.0
    max_position_offset: float = 5.0
    max_speed_offset: float = 5.0
    max_heading_offset: float = math.pi / 4

    @classmethod
    def from_file(cls, path) -> "PhysicalBounds":
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        raw = raw.get("bounds", raw)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown bounds keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in raw.items()})

    def delta_scale(self, n_steps: int) -> np.ndarray:
        head = [
            self.max_position_offset,
            self.max_position_offset,
            self.max_heading_offset,
            self.max_speed_offset,
        ]
        tail = np.tile([self.max_acceleration, self.max_curvature_rate], n_steps)
        return np.concatenate([head, tail])


DEFAULT_BOUNDS = PhysicalBounds()


class BicycleState(NamedTuple):
    x: float
    y: float
    theta: float
    v: float
    kappa: float = 0.0
    a: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class Trajectory:
    """Immutable sequence of bicycle states sampled every ``dt`` seconds."""

    __slots__ = ("_states",)

    def __init__(self, states):
        arr = np.array(states, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[1] != 6:
            raise ValueError(f"trajectory states must have shape (n, 6), got {arr.shape}")
        if len(arr) == 0:
            raise ValueError("trajectory must contain at least one state")
        if not np.all(np.isfinite(arr)):
            raise ValueError("trajectory states must be finite")
        arr.setflags(write=False)
        self._states = arr

    @property
    def states(self) -> np.ndarray:
        return self._states

    @property
    def xy(self) -> np.ndarray:
        return self._states[:, :2]

    @property
    def poses(self) -> np.ndarray:
        return self._states[:, :3]

    def __len__(self) -> int:
        return len(self._states)

    def __getitem__(self, i) -> BicycleState:
        return BicycleState(*self._states[i].tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self._states, other._states)

    def __hash__(self):
        return hash(self._states.tobytes())

    def __repr__(self) -> str:
        return f"Trajectory(n={len(self)}, start={self[0]})"


class Rollout(NamedTuple):
    trajectory: Trajectory
    n_clamped: int


class BoundsCheck(NamedTuple):
    ok: bool
    index: int | None = None
    field: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def rollout_batch(s0, controls, dt: float, bounds: PhysicalBounds = DEFAULT_BOUNDS):
    """Vectorized forward-Euler rollout.

    Parameters
    ----------
    s0 : ndarray (N, 6)
    controls : ndarray (N, T, 2) of ``(a, kappa_dot)``

    Returns
    -------
    states : ndarray (N, T + 1, 6)
    n_clamped : ndarray (N,) of int
    """
    s0 = np.atleast_2d(np.asarray(s0, dtype=float))
    controls = np.asarray(controls, dtype=float)
    if controls.ndim == 2:
        controls = controls[None]
    if not (np.all(np.isfinite(s0)) and np.all(np.isfinite(controls))):
        raise ValueError("rollout requires finite states and controls")
    n, T = controls.shape[0], controls.shape[1]
    out = np.empty((n, T + 1, 6))
    out[:, 0] = s0
    clamps = np.zeros(n, dtype=int)

    x, y, th, v, k = (s0[:, i].copy() for i in (X, Y, THETA, V, KAPPA))
    rate = bounds.max_curvature_rate * dt
    for t in range(T):
        a_cmd = controls[:, t, 0]
        kd_cmd = controls[:, t, 1]
        a_clip = np.clip(a_cmd, -bounds.max_acceleration, bounds.max_acceleration)
        kd_clip = np.clip(kd_cmd, -bounds.max_curvature_rate, bounds.max_curvature_rate)
        v_new = np.clip(v + a_clip * dt, 0.0, bounds.max_speed)
        k_new = np.clip(k + kd_clip * dt, -bounds.max_curvature, bounds.max_curvature)
        clamped = (a_clip != a_cmd) | (kd_clip != kd_cmd)
        clamped |= v_new != v + a_cmd * dt
        clamped |= k_new != k + kd_cmd * dt

        # lateral acceleration: shrink curvature inside the rate window,
        # and if that is not enough, cap the speed instead
        with np.errstate(divide="ignore"):
            k_lat = np.where(v_new > 0.0, bounds.max_lateral_acceleration / v_new**2, np.inf)
        over = np.abs(k_new) > k_lat
        if np.any(over):
            k_min = np.maximum(np.abs(k) - rate, 0.0)
            reachable = k_min <= k_lat
            target = np.copysign(np.where(reachable, k_lat, k_min), k_new)
            k_new = np.where(over, target, k_new)
            with np.errstate(divide="ignore"):
                v_cap = np.where(k_min > 0.0, np.sqrt(bounds.max_lateral_acceleration / np.maximum(k_min, 1e-300)), np.inf)
            v_new = np.where(over & ~reachable, np.minimum(v_new, v_cap), v_new)
            clamped |= over

        a_eff = np.where(clamped, (v_new - v) / dt, a_cmd)
        x_next = x + v * np.cos(th) * dt
        y_next = y + v * np.sin(th) * dt
        th_next = th + v * k * dt
        x, y, th, v, k = x_next, y_next, th_next, v_new, k_new
        out[:, t + 1] = np.stack([x, y, th, v, k, a_eff], axis=1)
        clamps += clamped
    return out, clamps


def rollout(s0, controls, dt: float, bounds: PhysicalBounds = DEFAULT_BOUNDS) -> Rollout:
    """Roll a single initial state forward under ``controls`` (shape (T, 2))."""
    controls = np.asarray(controls, dtype=float).reshape(-1, 2)
    states, clamps = rollout_batch(np.asarray(s0, dtype=float)[None], controls[None], dt, bounds)
    return Rollout(Trajectory(states[0]), int(clamps[0]))


def delta_dim(n_steps: int) -> int:
    return N_INITIAL + 2 * n_steps


def decode_batch(deltas, base, bounds: PhysicalBounds = DEFAULT_BOUNDS):
    """De-normalize perturbations into initial states and control sequences.

    Returns ``(s0 (N, 6), controls (N, T, 2))``.
    """
    deltas = np.atleast_2d(np.asarray(deltas, dtype=float))
    if (deltas.shape[1] - N_INITIAL) % 2 or deltas.shape[1] < N_INITIAL + 2:
        raise ValueError(f"perturbation length {deltas.shape[1]} is not 4 + 2T")
    T = (deltas.shape[1] - N_INITIAL) // 2
    concrete = deltas * bounds.delta_scale(T)
    base = np.asarray(base, dtype=float)

    s0 = np.empty((len(deltas), 6))
    s0[:, X] = base[X] + concrete[:, 0]
    s0[:, Y] = base[Y] + concrete[:, 1]
    s0[:, THETA] = base[THETA] + concrete[:, 2]
    s0[:, V] = np.clip(base[V] + concrete[:, 3], 0.0, bounds.max_speed)
    k = np.clip(base[KAPPA], -bounds.max_curvature, bounds.max_curvature)
    with np.errstate(divide="ignore"):
        k_lat = np.where(s0[:, V] > 0, bounds.max_lateral_acceleration / s0[:, V] ** 2, np.inf)
    s0[:, KAPPA] = np.clip(k, -k_lat, k_lat)
    s0[:, A] = np.clip(base[A], -bounds.max_acceleration, bounds.max_acceleration)
    controls = concrete[:, N_INITIAL:].reshape(len(deltas), T, 2)
    return s0, controls


def decode(delta, base, dt: float | None = None, bounds: PhysicalBounds = DEFAULT_BOUNDS):
    """Map one perturbation to ``(BicycleState, controls (T, 2))``.

    ``dt`` is accepted for signature symmetry with :func:`rollout`; the
    mapping itself is time-step independent.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.ndim != 1:
        raise ValueError("decode expects a single perturbation vector")
    s0, controls = decode_batch(delta[None], base, bounds)
    return BicycleState(*s0[0].tolist()), controls[0]


def encode(s0, controls, base, bounds: PhysicalBounds = DEFAULT_BOUNDS) -> np.ndarray:
    """Inverse of :func:`decode` for in-bounds concrete perturbations."""
    s0 = np.asarray(s0, dtype=float)
    base = np.asarray(base, dtype=float)
    controls = np.asarray(controls, dtype=float).reshape(-1, 2)
    concrete = np.concatenate(
        [[s0[X] - base[X], s0[Y] - base[Y], s0[THETA] - base[THETA], s0[V] - base[V]], controls.ravel()]
    )
    return concrete / bounds.delta_scale(len(controls))


def check_bounds(traj, dt: float, bounds: PhysicalBounds = DEFAULT_BOUNDS, tol: float = 1e-9) -> BoundsCheck:
    """Check every state and consecutive curvature change against ``bounds``."""
    states = traj.states if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    for i, row in enumerate(states):
        if not np.all(np.isfinite(row)):
            bad = STATE_FIELDS[int(np.argmin(np.isfinite(row)))]
            return BoundsCheck(False, i, bad)
        if abs(row[KAPPA]) > bounds.max_curvature + tol:
            return BoundsCheck(False, i, "kappa")
        if abs(row[A]) > bounds.max_acceleration + tol:
            return BoundsCheck(False, i, "a")
        if row[V] < -tol or row[V] > bounds.max_speed + tol:
            return BoundsCheck(False, i, "v")
        if abs(row[V] ** 2 * row[KAPPA]) > bounds.max_lateral_acceleration + tol:
            return BoundsCheck(False, i, "lateral_acceleration")
        if i and abs(row[KAPPA] - states[i - 1, KAPPA]) / dt > bounds.max_curvature_rate + tol:
            return BoundsCheck(False, i, "kappa_rate")
    return BoundsCheck(True)


def bounds_mask(states, dt: float, bounds: PhysicalBounds = DEFAULT_BOUNDS, tol: float = 1e-9) -> np.ndarray:
    """Vectorized :func:`check_bounds` over a batch ``(N, H, 6)``."""
    s = np.asarray(states, dtype=float)
    ok = np.all(np.isfinite(s), axis=(1, 2))
    ok &= np.all(np.abs(s[..., KAPPA]) <= bounds.max_curvature + tol, axis=1)
    ok &= np.all(np.abs(s[..., A]) <= bounds.max_acceleration + tol, axis=1)
    ok &= np.all((s[..., V] >= -tol) & (s[..., V] <= bounds.max_speed + tol), axis=1)
    ok &= np.all(np.abs(s[..., V] ** 2 * s[..., KAPPA]) <= bounds.max_lateral_acceleration + tol, axis=1)
    ok &= np.all(np.abs(np.diff(s[..., KAPPA], axis=1)) / dt <= bounds.max_curvature_rate + tol, axis=1)
    return ok
