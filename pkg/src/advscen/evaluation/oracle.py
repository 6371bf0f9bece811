"""Exhaustive grid search over a reduced perturbation space.

The reduced space has six coordinates: the four initial-state offsets plus
one acceleration and one curvature rate held for the whole horizon. Each
coordinate takes ``levels`` evenly spaced values in [-1, 1]. Grid points are
checked directly for plausibility (no projection), so a colliding grid point
proves that a plausible collision-inducing behaviour exists.
"""

from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np

from ..adversary.objective import collision_steps
from ..autonomy.stacks import make_stack
from ..feasibility import perturbed_states, plausible_mask, rank_actors
from ..kinematics import bounds_mask
from ..scenario import Scenario

REDUCED_DIM = 6


def expand_reduced(reduced, n_future: int) -> np.ndarray:
    """``(N, 6)`` reduced perturbations -> ``(N, 4 + 2T)`` full ones."""
    reduced = np.atleast_2d(np.asarray(reduced, dtype=float))
    controls = np.tile(reduced[:, 4:6], (1, n_future))
    return np.concatenate([reduced[:, :4], controls], axis=1)


def reduced_grid(levels: int = 5) -> np.ndarray:
    values = np.linspace(-1.0, 1.0, levels)
    return np.array(list(itertools.product(values, repeat=REDUCED_DIM)))


def grid_oracle(scenario: Scenario, stack="sensor", actor_id: int | None = None, levels: int = 5,
                planner=None) -> dict:
    """Run the stack on every plausible grid point for one actor.

    Returns counts and the first colliding reduced perturbation (grid order),
    or ``None`` if no grid point makes the plan collide.
    """
    if isinstance(stack, str):
        stack = make_stack(stack, planner)
    if actor_id is None:
        actor_id = rank_actors(scenario)[0]
    grid = reduced_grid(levels)
    full = expand_reduced(grid, scenario.n_future)
    states = perturbed_states(full, scenario, actor_id)
    ok = plausible_mask(states, scenario, actor_id) & bounds_mask(states, scenario.dt)
    n_colliding = 0
    first = None
    for i in np.flatnonzero(ok):
        trajs = {actor_id: states[i]}
        plan = stack.predict(scenario, trajs)
        world = scenario.with_trajectories(trajs)
        if collision_steps(plan, world).any():
            n_colliding += 1
            if first is None:
                first = grid[i].tolist()
    return {
        "scenario": scenario.name,
        "actor_id": int(actor_id),
        "levels": levels,
        "n_grid": int(len(grid)),
        "n_plausible": int(ok.sum()),
        "n_colliding": n_colliding,
        "first_colliding": first,
    }


def load_oracle(path) -> dict:
    """Committed oracle results keyed by scenario name."""
    doc = json.loads(Path(path).read_text())
    return {row["scenario"]: row for row in doc["results"]}


def write_oracle(scenarios, path, stack="sensor", levels: int = 5) -> dict:
    """Run :func:`grid_oracle` on every scenario and save the results as JSON."""
    stack_obj = make_stack(stack) if isinstance(stack, str) else stack
    doc = {
        "stack": stack if isinstance(stack, str) else stack.kind,
        "levels": levels,
        "results": [grid_oracle(s, stack_obj, levels=levels) for s in scenarios],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    return doc
