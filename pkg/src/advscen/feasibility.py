"""Physically plausible trajectory sets for perturbed actors.

Random perturbations are decoded, rolled out with the bicycle model and
rejected when they collide with any other actor, with the expert SDV
trajectory, or leave the road. Optimizer proposals are later snapped to
the nearest survivor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .geometry import boxes_overlap
from .kinematics import (
    DEFAULT_BOUNDS,
    PhysicalBounds,
    Trajectory,
    bounds_mask,
    decode_batch,
    delta_dim,
    rollout_batch,
)
from .rng import as_random_source
from .scenario import Scenario

logger = logging.getLogger(__name__)

N_MIN = 100
DEFAULT_N_SAMPLE = 10_000
_CHUNK = 2_000


class ActorInfeasibleError(RuntimeError):
    """Too few plausible trajectories survived rejection sampling."""

    def __init__(self, actor_id, n_found, n_min):
        super().__init__(f"actor infeasible: actor {actor_id} kept {n_found} < {n_min} trajectories")
        self.actor_id = actor_id
        self.n_found = n_found


class ActorSelectionError(RuntimeError):
    def __init__(self, n_found, m):
        super().__init__(f"only {n_found} feasible actors found, {m} requested")
        self.n_found = n_found


class Plausibility(NamedTuple):
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class FeasibleSet:
    actor_id: int
    states: np.ndarray  # (K, H, 6)
    deltas: np.ndarray  # (K, D) normalized samples that produced each member
    sample_index: np.ndarray  # (K,) position in the original draw
    seed: int
    n_sample: int

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i) -> Trajectory:
        return Trajectory(self.states[i])

    @property
    def acceptance_rate(self) -> float:
        return len(self) / self.n_sample


def attach_history(s0, future, n_history: int, dt: float) -> np.ndarray:
    """Prepend back-extrapolated observation states to rolled-out futures.

    ``future`` is ``(N, T + 1, 6)`` starting at ``s0``; the returned array is
    ``(N, n_history + T, 6)`` with ``s0`` at index ``n_history - 1``. Earlier
    states move backwards along the initial heading at the initial speed.
    """
    s0 = np.atleast_2d(s0)
    future = np.asarray(future)
    if future.ndim == 2:
        future = future[None]
    back = np.arange(n_history - 1, 0, -1, dtype=float) * dt  # oldest first
    hist = np.repeat(s0[:, None, :], n_history - 1, axis=1)
    step = s0[:, 3, None] * back[None, :]
    hist[..., 0] -= step * np.cos(s0[:, 2, None])
    hist[..., 1] -= step * np.sin(s0[:, 2, None])
    return np.concatenate([hist, future], axis=1)


def perturbed_states(deltas, scenario: Scenario, actor_id: int, bounds: PhysicalBounds = DEFAULT_BOUNDS):
    """Decode and roll out a batch of perturbations for one actor -> ``(N, H, 6)``."""
    base = scenario.actor(actor_id).trajectory.states[scenario.current_index]
    s0, controls = decode_batch(deltas, base, bounds)
    future, _ = rollout_batch(s0, controls, scenario.dt, bounds)
    return attach_history(s0, future, scenario.n_history, scenario.dt)


def _others(scenario: Scenario, actor_id: int):
    others = [a for a in scenario.actors if a.id != actor_id]
    if not others:
        return np.zeros((0, scenario.horizon, 3)), np.zeros((0, 2)), []
    return (
        np.stack([a.trajectory.poses for a in others]),
        np.stack([a.dims for a in others]),
        [a.id for a in others],
    )


def plausibility_masks(states, scenario: Scenario, actor_id: int):
    """Per-timestep failure masks for a batch of candidate trajectories.

    Returns ``(hits_actor (N, M, H), hits_sdv (N, H), off_road (N, H), other_ids)``.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 2:
        states = states[None]
    dims = scenario.actor(actor_id).dims
    poses = states[..., :3]
    o_poses, o_dims, o_ids = _others(scenario, actor_id)
    if len(o_ids):
        hits_actor = boxes_overlap(poses[:, None], dims, o_poses[None], o_dims[None, :, None, :])
    else:
        hits_actor = np.zeros((len(states), 0, states.shape[1]), dtype=bool)
    hits_sdv = boxes_overlap(poses, dims, scenario.sdv_expert.poses[None], scenario.sdv_dims)
    off_road = ~scenario.map.on_road(poses[..., :2].reshape(-1, 2)).reshape(poses.shape[:2])
    return hits_actor, hits_sdv, off_road, o_ids


def plausible_mask(states, scenario: Scenario, actor_id: int) -> np.ndarray:
    hits_actor, hits_sdv, off_road, _ = plausibility_masks(states, scenario, actor_id)
    bad = hits_actor.any(axis=(1, 2)) | hits_sdv.any(axis=1) | off_road.any(axis=1)
    return ~bad


def is_plausible(traj, scenario: Scenario, actor_id: int) -> Plausibility:
    """Check one trajectory; the reason names the first failing step and check."""
    states = traj.states if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if len(states) != scenario.horizon:
        raise ValueError(f"trajectory has {len(states)} states, scenario horizon is {scenario.horizon}")
    hits_actor, hits_sdv, off_road, o_ids = plausibility_masks(states[None], scenario, actor_id)
    for t in range(scenario.horizon):
        for j, oid in enumerate(o_ids):
            if hits_actor[0, j, t]:
                return Plausibility(False, f"collides actor {oid} @ {t}")
        if hits_sdv[0, t]:
            return Plausibility(False, f"collides expert SDV @ {t}")
        if off_road[0, t]:
            return Plausibility(False, f"off-road @ {t}")
    return Plausibility(True)


def _cache_path(cache_dir, scenario: Scenario, actor_id, seed, n_sample) -> Path:
    return Path(cache_dir) / f"feasible-{scenario.digest()}-a{actor_id}-s{seed}-n{n_sample}.npz"


def sample_feasible_set(
    scenario: Scenario,
    actor_id: int,
    n_sample: int = DEFAULT_N_SAMPLE,
    rng=None,
    bounds: PhysicalBounds = DEFAULT_BOUNDS,
    n_min: int = N_MIN,
    cache_dir=None,
) -> FeasibleSet:
    """Rejection-sample the plausible trajectory set of one actor.

    Survivors keep their draw order, so the result does not depend on how
    the batch is chunked.
    """
    actor = scenario.actor(actor_id)
    if not actor.perturbable:
        raise ValueError(f"actor {actor_id} is not perturbable")
    source = as_random_source(rng)
    cache = _cache_path(cache_dir, scenario, actor_id, source.seed, n_sample) if cache_dir else None
    if cache is not None and cache.exists():
        data = np.load(cache)
        fs = FeasibleSet(actor_id, data["states"], data["deltas"], data["sample_index"], source.seed, n_sample)
    else:
        dim = delta_dim(scenario.n_future)
        deltas = source.stream(f"feasible/actor-{actor_id}").uniform(-1.0, 1.0, size=(n_sample, dim))
        keep_states, keep_idx = [], []
        for lo in range(0, n_sample, _CHUNK):
            chunk = deltas[lo : lo + _CHUNK]
            states = perturbed_states(chunk, scenario, actor_id, bounds)
            ok = plausible_mask(states, scenario, actor_id) & bounds_mask(states, scenario.dt, bounds)
            keep_states.append(states[ok])
            keep_idx.append(lo + np.flatnonzero(ok))
        idx = np.concatenate(keep_idx)
        fs = FeasibleSet(
            actor_id,
            np.concatenate(keep_states) if keep_states else np.zeros((0, scenario.horizon, 6)),
            deltas[idx],
            idx,
            source.seed,
            n_sample,
        )
        if cache is not None:
            cache.parent.mkdir(parents=True, exist_ok=True)
            np.savez(cache, states=fs.states, deltas=fs.deltas, sample_index=fs.sample_index)
    logger.debug("actor %s: %d/%d plausible", actor_id, len(fs), n_sample)
    if len(fs) < n_min:
        raise ActorInfeasibleError(actor_id, len(fs), n_min)
    return fs


def projection_distances(traj, fs: FeasibleSet) -> np.ndarray:
    states = traj.states if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    diff = fs.states[..., :2] - states[None, :, :2]
    return np.einsum("kti,kti->k", diff, diff)


def project_index(traj, fs: FeasibleSet) -> int:
    """Index of the member closest in summed squared waypoint distance (lowest index on ties)."""
    if len(fs) == 0:
        raise ValueError("cannot project onto an empty feasible set")
    return int(np.argmin(projection_distances(traj, fs)))


def project(traj, fs: FeasibleSet) -> Trajectory:
    return fs[project_index(traj, fs)]


def rank_actors(scenario: Scenario) -> list[int]:
    """Perturbable actors ordered by closest same-time approach to the expert SDV."""
    sdv = scenario.sdv_expert.xy
    scored = []
    for a in scenario.actors:
        if not a.perturbable:
            continue
        d = np.hypot(*(a.trajectory.xy - sdv).T).min()
        scored.append((d, a.id))
    return [aid for _, aid in sorted(scored)]


def select_and_sample(
    scenario: Scenario,
    m: int = 1,
    n_sample: int = DEFAULT_N_SAMPLE,
    rng=None,
    bounds: PhysicalBounds = DEFAULT_BOUNDS,
    n_min: int = N_MIN,
    cache_dir=None,
) -> list[FeasibleSet]:
    """Pick the ``m`` closest actors that admit a feasible set and sample those sets.

    Each set is conditioned on the other actors' original trajectories.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    chosen = []
    for actor_id in rank_actors(scenario):
        try:
            chosen.append(sample_feasible_set(scenario, actor_id, n_sample, rng, bounds, n_min, cache_dir))
        except ActorInfeasibleError as exc:
            logger.info("skipping actor %s: %s", actor_id, exc)
            continue
        if len(chosen) == m:
            return chosen
    raise ActorSelectionError(len(chosen), m)


def select_perturbed_actors(scenario: Scenario, m: int = 1, **kwargs) -> list[int]:
    return [fs.actor_id for fs in select_and_sample(scenario, m, **kwargs)]
