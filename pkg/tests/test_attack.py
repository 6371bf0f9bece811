import numpy as np
import pytest

from advscen.adversary.attack import (
    AttackConfig,
    PerturbationSpace,
    ScenarioAttacker,
    attack,
    record_rows,
    replay,
)
from advscen.adversary.objective import adversarial_loss
from advscen.autonomy.planner import Plan
from advscen.autonomy.stacks import SensorStack
from advscen.evaluation.oracle import expand_reduced, grid_oracle, reduced_grid
from advscen.feasibility import ActorSelectionError, is_plausible
from advscen.kinematics import rollout
from advscen.scenario import Scenario
from advscen.toy import LANE_WIDTH, _actor, boxed_in_scenario, speed_profile_states, straight_road

W = LANE_WIDTH


class StraightStack:
    """Ignores everything and keeps the current speed and heading."""

    kind = "straight"

    def __init__(self):
        self.calls = 0

    def predict(self, scenario, perturbed=None):
        self.calls += 1
        s0 = scenario.sdv_expert.states[scenario.current_index].copy()
        s0[4:] = 0.0
        traj = rollout(s0, np.zeros((scenario.n_future, 2)), scenario.dt).trajectory
        return Plan(traj, 0.0, {}, 0)


def adjacent_actor_scene():
    sdv = speed_profile_states(0.0, 0.0, 10.0, accel=-1.0)
    return Scenario(straight_road(), (_actor(1, speed_profile_states(14.0, W, 9.0)),), sdv, name="adjacent")


@pytest.fixture(scope="module")
def bo_result():
    s = adjacent_actor_scene()
    return s, attack(s, AttackConfig("BO", budget=75), stack=StraightStack())


def test_grid_oracle_finds_collision_for_naive_planner():
    s = adjacent_actor_scene()
    out = grid_oracle(s, StraightStack())
    assert out["n_colliding"] > 0
    first = np.array(out["first_colliding"])
    assert first.shape == (6,) and np.all(np.isin(first, np.linspace(-1, 1, 5)))


def test_bo_finds_collision_for_naive_planner(bo_result):
    _, result = bo_result
    assert result.loss.terms["collision"] > 0
    assert len(result.record) == 75 == result.n_pipeline_runs


def test_winner_is_plausible_feasible_member(bo_result):
    s, result = bo_result
    fs = result.feasible_sets[0]
    traj = result.trajectories[1]
    assert is_plausible(traj, s, 1)
    k = result.record.best.info.member_index[1]
    if k >= 0:
        assert np.array_equal(traj.states, fs.states[k])
    else:
        assert traj == s.actor(1).trajectory


def test_loss_recomputes_from_winner(bo_result):
    s, result = bo_result
    again = adversarial_loss(result.plan, result.perturbed)
    assert again.value == result.record.best_value == result.loss.value


def test_baseline_query_is_original(bo_result):
    s, result = bo_result
    assert result.baseline.info.member_index == {1: -1}
    assert np.array_equal(result.baseline.delta, np.zeros(24))


def test_infeasible_selection_raises_before_querying():
    stack = StraightStack()
    with pytest.raises(ActorSelectionError):
        attack(boxed_in_scenario(), AttackConfig("RS", m=2), stack=stack)
    assert stack.calls == 0


def test_single_query_budget_is_baseline_only():
    s = adjacent_actor_scene()
    result = attack(s, AttackConfig("GA", budget=1), stack=StraightStack())
    assert len(result.record) == 1
    assert result.perturbed == s
    assert result.record.best_value == adversarial_loss(StraightStack().predict(s), s).value


def test_perturbation_space_round_trip():
    s = adjacent_actor_scene()
    result = attack(s, AttackConfig("RS", budget=5), stack=StraightStack())
    space = PerturbationSpace(s, result.feasible_sets)
    fs = result.feasible_sets[0]
    # a member's own sample projects back onto itself
    assert space.members(fs.deltas[3]) == {1: 3}
    with pytest.raises(ValueError):
        space.members(np.full(24, 1.5))


def test_attacker_estimator_and_replay(suite):
    s = suite[2]
    est = ScenarioAttacker(algorithm="RS", budget=8).fit(s)
    assert est.transform(s) == est.result_.perturbed
    with pytest.raises(ValueError):
        est.transform(suite[0])
    assert replay(est.result_).trajectory == est.result_.plan.trajectory
    rows = record_rows(est.result_.record)
    assert len(rows) == 8 and rows[0]["member_" + str(est.result_.actor_ids[0])] == -1
    assert all("term_collision" in r for r in rows)


def test_unfitted_transform_raises(suite):
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        ScenarioAttacker().transform(suite[0])


def test_sensor_attack_keeps_sweeps(suite):
    s = suite[0]
    result = attack(s, AttackConfig("RS", budget=6), stack=SensorStack())
    assert len(result.sweeps) == s.n_history
    assert result.n_pipeline_runs == 6


def test_multi_actor_dimension(suite):
    s = suite[5]
    result = attack(s, AttackConfig("RS", budget=4, m=2), stack=StraightStack())
    assert len(result.actor_ids) == 2 and result.record.dim == 48
    for aid in result.actor_ids:
        assert is_plausible(result.trajectories[aid], s, aid)


def test_reduced_grid_expansion():
    g = reduced_grid(3)
    assert g.shape == (3**6, 6)
    full = expand_reduced(g[:2], 10)
    assert full.shape == (2, 24)
    assert np.array_equal(full[1, 4::2], np.full(10, g[1, 4]))
