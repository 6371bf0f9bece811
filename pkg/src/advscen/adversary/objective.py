"""Adversarial objective: imitation, collision and safety terms scored on a plan.

Every term looks only at the planned future (plan steps 1..T), aligned with
scenario steps ``current_index + 1 ...``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autonomy.planner import Plan, jerk, lateral_acceleration
from ..geometry import boxes_overlap
from ..kinematics import DEFAULT_BOUNDS, Trajectory
from ..scenario import HDMap, Scenario

SMOOTH_L1_KINK = 1.0
COLLISION_WEIGHT = 10.0
JERK_LIMIT = 2.0

TERMS = ("imitation", "collision", "safety")
MASKS = {
    "M0": (True, True, True),
    "M1": (True, False, False),
    "M2": (False, True, False),
    "M3": (True, True, False),
    "M4": (False, False, True),
    "M5": (False, True, True),
}
DEFAULT_MASK = "M3"


def _future_states(x) -> np.ndarray:
    """Plan -> its steps 1..T; Trajectory or array -> as given."""
    if isinstance(x, Plan):
        return x.trajectory.states[1:]
    if isinstance(x, Trajectory):
        return x.states
    return np.asarray(x, dtype=float)


def smooth_l1(d, kink: float = SMOOTH_L1_KINK) -> np.ndarray:
    d = np.abs(np.asarray(d, dtype=float))
    return np.where(d < kink, 0.5 * d**2 / kink, d - 0.5 * kink)


def imitation_cost(plan, expert) -> float:
    """Sum of smooth-L1 position errors between planned and expert futures."""
    p = _future_states(plan)
    e = _future_states(expert)
    if len(p) != len(e):
        raise ValueError(f"horizon mismatch: plan has {len(p)} steps, expert {len(e)}")
    return float(np.sum(smooth_l1(np.hypot(*(p[:, :2] - e[:, :2]).T))))


def collision_steps(plan, world: Scenario, sdv_dims=None) -> np.ndarray:
    """Boolean per plan step: SDV footprint overlaps any actor footprint at that step."""
    p = _future_states(plan)
    T = len(p)
    now = world.current_index
    dims = world.sdv_dims if sdv_dims is None else sdv_dims
    hit = np.zeros(T, dtype=bool)
    for actor in world.actors:
        poses = actor.trajectory.poses[now + 1 : now + 1 + T]
        if len(poses) != T:
            raise ValueError(f"actor {actor.id} has {len(poses)} future steps, plan has {T}")
        hit |= boxes_overlap(p[:, :3], dims, poses, actor.dims)
    return hit


def collision_cost(plan, world: Scenario, weight: float = COLLISION_WEIGHT) -> float:
    return float(weight * np.count_nonzero(collision_steps(plan, world)))


def safety_terms(plan, hd_map: HDMap, dt: float, lat_limit: float = DEFAULT_BOUNDS.max_lateral_acceleration,
                 jerk_limit: float = JERK_LIMIT) -> dict:
    """Per-step safety violations: off-road indicator and excess lateral acceleration and jerk.

    Jerk needs the current state too, so pass a Plan (or T+1 states) for it
    to cover step 1; with only future states it covers steps 2..T-1.
    """
    if isinstance(plan, Plan):
        full = plan.trajectory.states
        fut = full[1:]
        j = jerk(full[:, 3], dt)  # steps 1..T-1
    else:
        fut = _future_states(plan)
        j = jerk(fut[:, 3], dt)
    return {
        "offroad": (~hd_map.on_road(fut[:, :2])).astype(float),
        "lateral": np.maximum(0.0, np.abs(lateral_acceleration(fut)) - lat_limit),
        "jerk": np.maximum(0.0, np.abs(j) - jerk_limit),
    }


def safety_cost(plan, hd_map: HDMap, dt: float, **kw) -> float:
    return float(sum(np.sum(v) for v in safety_terms(plan, hd_map, dt, **kw).values()))


@dataclass(frozen=True)
class LossValue:
    value: float
    terms: dict  # unmasked term values
    mask: str

    def __float__(self) -> float:
        return self.value


def resolve_mask(mask) -> tuple:
    if isinstance(mask, str):
        try:
            return MASKS[mask]
        except KeyError:
            raise ValueError(f"unknown mask {mask!r}; expected one of {sorted(MASKS)}") from None
    mask = tuple(bool(m) for m in mask)
    if len(mask) != 3:
        raise ValueError("a mask needs one flag per term (imitation, collision, safety)")
    return mask


def adversarial_loss(plan: Plan, world: Scenario, mask=DEFAULT_MASK,
                     collision_weight: float = COLLISION_WEIGHT) -> LossValue:
    """Masked sum of the three terms for a plan produced on ``world``.

    The expert reference is the recorded SDV future of ``world``.
    """
    now = world.current_index
    expert = world.sdv_expert.states[now + 1 :]
    terms = {
        "imitation": imitation_cost(plan, expert),
        "collision": collision_cost(plan, world, collision_weight),
        "safety": safety_cost(plan, world.map, world.dt),
    }
    flags = resolve_mask(mask)
    value = float(sum(terms[name] for name, on in zip(TERMS, flags) if on))
    return LossValue(value, terms, mask if isinstance(mask, str) else "custom")
