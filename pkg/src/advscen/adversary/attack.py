"""End-to-end scenario attack: actor selection, feasible sets, search and replay.

One query maps a normalized perturbation to concrete actor trajectories
(decode, roll out, project onto the actor's feasible set), runs the autonomy
stack on the edited scene and scores the resulting plan.

Config files are YAML (or JSON) mappings with the :class:`AttackConfig`
field names, e.g.::

    algorithm: BO
    budget: 75
    m: 1
    seed: 7
    mask: M3
    stack: sensor
    n_sample: 10000
    hyperparams: {beta: 3.0}
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..autonomy.planner import Plan
from ..autonomy.stacks import STACK_KINDS, SensorStack, make_stack
from ..feasibility import DEFAULT_N_SAMPLE, FeasibleSet, perturbed_states, project_index, select_and_sample
from ..kinematics import delta_dim
from ..rng import as_random_source
from ..scenario import Scenario
from ..validation import check_delta
from .objective import COLLISION_WEIGHT, DEFAULT_MASK, MASKS, LossValue, adversarial_loss
from .optimizers import ALGORITHMS, AttackRecord, make_optimizer

logger = logging.getLogger(__name__)


def default_hyperparams(algorithm: str) -> dict:
    """Search hyperparameters of ``algorithm`` as shipped (seed and budget excluded)."""
    params = make_optimizer(algorithm).get_params()
    params.pop("seed")
    params.pop("budget")
    return params


@dataclass(frozen=True)
class AttackConfig:
    algorithm: str = "BO"
    budget: int | None = None  # None: the algorithm's own schedule
    m: int = 1
    seed: int = 0
    mask: str = DEFAULT_MASK
    stack: str = "sensor"
    n_sample: int = DEFAULT_N_SAMPLE
    collision_weight: float = COLLISION_WEIGHT
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        names = {k.lower(): k for k in ALGORITHMS}
        key = self.algorithm.lower().replace("-", "").replace("_", "")
        key = "bandittd" if key == "bandit" else key
        if key not in names:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {sorted(ALGORITHMS)}")
        object.__setattr__(self, "algorithm", names[key])
        if self.budget is not None and int(self.budget) < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if int(self.m) < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.mask not in MASKS:
            raise ValueError(f"unknown mask {self.mask!r}; expected one of {sorted(MASKS)}")
        if self.stack not in STACK_KINDS:
            raise ValueError(f"unknown stack {self.stack!r}; expected one of {STACK_KINDS}")
        if int(self.n_sample) < 1:
            raise ValueError("n_sample must be positive")
        allowed = set(default_hyperparams(self.algorithm))
        unknown = set(self.hyperparams) - allowed
        if unknown:
            raise ValueError(f"unknown {self.algorithm} hyperparameters {sorted(unknown)}; allowed: {sorted(allowed)}")
        for k, v in self.hyperparams.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool) and v <= 0:
                raise ValueError(f"hyperparameter {k} must be positive, got {v}")

    def optimizer(self):
        return make_optimizer(self.algorithm, budget=self.budget, seed=self.seed, **self.hyperparams)

    def effective_hyperparams(self) -> dict:
        return {**default_hyperparams(self.algorithm), **self.hyperparams}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "AttackConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "AttackConfig":
        text = Path(path).read_text()
        doc = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
        return cls.from_dict(doc or {})


@dataclass
class QueryInfo:
    """What one query produced, kept alongside its value in the record."""

    member_index: dict  # actor id -> feasible-set row, -1 for the untouched original
    terms: dict
    plan: Plan = field(repr=False)


@dataclass
class AttackResult:
    config: AttackConfig
    scenario: Scenario
    actor_ids: list
    feasible_sets: list = field(repr=False)
    record: AttackRecord = field(repr=False)
    perturbed: Scenario = field(repr=False)
    plan: Plan = field(repr=False)
    loss: LossValue = None
    sweeps: tuple = field(default=(), repr=False)
    n_pipeline_runs: int = 0

    @property
    def trajectories(self) -> dict:
        return {aid: self.perturbed.actor(aid).trajectory for aid in self.actor_ids}

    @property
    def baseline(self):
        return self.record.queries[0]


class PerturbationSpace:
    """Maps a concatenated normalized perturbation to projected actor trajectories."""

    def __init__(self, scenario: Scenario, feasible_sets: list[FeasibleSet]):
        self.scenario = scenario
        self.feasible_sets = list(feasible_sets)
        self.per_actor = delta_dim(scenario.n_future)

    @property
    def dim(self) -> int:
        return self.per_actor * len(self.feasible_sets)

    @property
    def actor_ids(self) -> list:
        return [fs.actor_id for fs in self.feasible_sets]

    def members(self, delta) -> dict:
        """Actor id -> feasible-set row; the all-zero perturbation keeps the originals (-1)."""
        delta = check_delta(delta, self.dim)
        if not np.any(delta):
            return {aid: -1 for aid in self.actor_ids}
        out = {}
        for i, fs in enumerate(self.feasible_sets):
            chunk = delta[i * self.per_actor : (i + 1) * self.per_actor]
            raw = perturbed_states(chunk[None], self.scenario, fs.actor_id)[0]
            out[fs.actor_id] = project_index(raw, fs)
        return out

    def trajectories(self, members: dict) -> dict:
        out = {}
        for fs in self.feasible_sets:
            k = members[fs.actor_id]
            out[fs.actor_id] = self.scenario.actor(fs.actor_id).trajectory if k < 0 else fs[k]
        return out

    def __call__(self, delta) -> dict:
        return self.trajectories(self.members(delta))


class ScenarioAttacker(BaseEstimator):
    """Search for the perturbation of the closest ``m`` actors that hurts the stack most.

    ``fit(scenario)`` runs the attack and keeps the result in ``result_``;
    ``transform(scenario)`` returns the worst-case scenario found.
    """

    def __init__(self, algorithm="BO", budget=None, m=1, seed=0, mask=DEFAULT_MASK, stack="sensor",
                 n_sample=DEFAULT_N_SAMPLE, collision_weight=COLLISION_WEIGHT, hyperparams=None, planner=None,
                 cache_dir=None):
        self.algorithm = algorithm
        self.budget = budget
        self.m = m
        self.seed = seed
        self.mask = mask
        self.stack = stack
        self.n_sample = n_sample
        self.collision_weight = collision_weight
        self.hyperparams = hyperparams
        self.planner = planner
        self.cache_dir = cache_dir

    def config(self) -> AttackConfig:
        return AttackConfig(self.algorithm, self.budget, self.m, self.seed, self.mask, self.stack, self.n_sample,
                            self.collision_weight, dict(self.hyperparams or {}))

    def fit(self, scenario: Scenario, y=None):
        self.result_ = attack(scenario, self.config(), planner=self.planner, cache_dir=self.cache_dir)
        return self

    def transform(self, scenario: Scenario) -> Scenario:
        check_is_fitted(self, "result_")
        if scenario.digest() != self.result_.scenario.digest():
            raise ValueError("transform expects the scenario the attacker was fitted on")
        return self.result_.perturbed


def attack(scenario: Scenario, config: AttackConfig | None = None, stack=None, planner=None, cache_dir=None,
           feasible_sets: list[FeasibleSet] | None = None) -> AttackResult:
    """Run one attack.

    ``stack`` may be a stack instance to reuse simulator caches across calls;
    by default one is built from ``config.stack``. Feasible sets are drawn
    from ``config.seed`` unless given.
    """
    config = config or AttackConfig()
    if stack is None:
        stack = make_stack(config.stack, planner)
    if feasible_sets is None:
        feasible_sets = select_and_sample(scenario, config.m, n_sample=config.n_sample,
                                          rng=as_random_source(config.seed), cache_dir=cache_dir)
    space = PerturbationSpace(scenario, feasible_sets)
    runs = 0

    def objective(delta):
        nonlocal runs
        members = space.members(delta)
        trajs = space.trajectories(members)
        plan = stack.predict(scenario, trajs)
        runs += 1
        loss = adversarial_loss(plan, scenario.with_trajectories(trajs), config.mask, config.collision_weight)
        return loss.value, QueryInfo(members, loss.terms, plan)

    optimizer = config.optimizer()
    optimizer.fit(objective, space.dim)
    record = optimizer.record_
    if runs != len(record):
        raise AssertionError(f"{len(record)} recorded queries but {runs} pipeline runs")

    best = record.best
    trajs = space.trajectories(best.info.member_index)
    perturbed = scenario.with_trajectories(trajs)
    loss = adversarial_loss(best.info.plan, perturbed, config.mask, config.collision_weight)
    sweeps = tuple(stack.sweeps(scenario, trajs)) if isinstance(stack, SensorStack) else ()
    logger.info("%s on %s: best %.3f at query %d/%d", config.algorithm, scenario.name, best.value,
                record.best_index + 1, len(record))
    return AttackResult(config, scenario, space.actor_ids, feasible_sets, record, perturbed, best.info.plan, loss,
                        sweeps, runs)


def replay(result: AttackResult, stack=None, planner=None) -> Plan:
    """Re-run a stack on the attack winner (e.g. a different stack, for transfer)."""
    stack = stack or make_stack(result.config.stack, planner)
    if isinstance(stack, str):
        stack = make_stack(stack, planner)
    return stack.predict(result.scenario, result.trajectories)


def record_rows(record: AttackRecord) -> list[dict]:
    """One flat dict per query: index, value, best-so-far, term values, members, wall time."""
    rows = []
    best = record.best_so_far()
    for i, q in enumerate(record.queries):
        row = {"query": i + 1, "value": q.value, "best_so_far": float(best[i]), "wall_time": q.wall_time}
        if isinstance(q.info, QueryInfo):
            row.update({f"term_{k}": v for k, v in q.info.terms.items()})
            row.update({f"member_{k}": v for k, v in q.info.member_index.items()})
        rows.append(row)
    return rows

