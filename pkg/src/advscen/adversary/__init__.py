"""Adversarial objective, black-box search algorithms and the scenario attack loop."""

from .attack import AttackConfig, AttackResult, PerturbationSpace, ScenarioAttacker, attack, default_hyperparams, replay
from .objective import (
    DEFAULT_MASK,
    MASKS,
    adversarial_loss,
    collision_cost,
    imitation_cost,
    safety_cost,
    smooth_l1,
)
from .optimizers import (
    ALGORITHMS,
    AttackAborted,
    AttackRecord,
    BanditTDOptimizer,
    BayesianOptimizer,
    GeneticOptimizer,
    NESOptimizer,
    RandomSearchOptimizer,
    make_optimizer,
)

__all__ = [
    "ALGORITHMS", "DEFAULT_MASK", "MASKS", "AttackAborted", "AttackConfig", "AttackRecord", "AttackResult",
    "BanditTDOptimizer", "BayesianOptimizer", "GeneticOptimizer", "NESOptimizer", "PerturbationSpace",
    "RandomSearchOptimizer", "ScenarioAttacker", "adversarial_loss", "attack", "collision_cost",
    "default_hyperparams", "imitation_cost", "make_optimizer", "replay", "safety_cost", "smooth_l1",
]
