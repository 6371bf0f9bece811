import numpy as np
import pytest

from advscen.feasibility import (
    ActorInfeasibleError,
    ActorSelectionError,
    FeasibleSet,
    is_plausible,
    project,
    project_index,
    projection_distances,
    rank_actors,
    sample_feasible_set,
    select_perturbed_actors,
)
from advscen.kinematics import check_bounds
from advscen.scenario import Scenario
from advscen.toy import LANE_WIDTH, _actor, boxed_in_scenario, speed_profile_states, straight_road

W = LANE_WIDTH


def scene(actors, sdv_x=0.0, sdv_v=8.0, buildings=False):
    return Scenario(straight_road(buildings=buildings), tuple(actors),
                    speed_profile_states(sdv_x, 0.0, sdv_v), name="t")


def open_road_scene():
    return scene([_actor(1, speed_profile_states(20.0, W, 8.0))], sdv_x=-60.0)


def corridor_clearance(xy):
    """Independent corridor check for the three straight lanes at y = -w, 0, w."""
    return W * 1.5 - np.abs(xy[:, 1])


def test_empty_road_has_enough_members():
    s = open_road_scene()
    fs = sample_feasible_set(s, 1, n_sample=1000, rng=0)
    assert len(fs) >= 100
    assert all(check_bounds(fs[i], s.dt) for i in range(len(fs)))
    assert all(is_plausible(fs[i], s, 1) for i in range(len(fs)))


def test_boxed_in_actor_is_infeasible():
    with pytest.raises(ActorInfeasibleError, match="actor infeasible"):
        sample_feasible_set(boxed_in_scenario(), 1, n_sample=1000, rng=0)


def test_same_seed_same_set(tmp_path):
    s = open_road_scene()
    a = sample_feasible_set(s, 1, n_sample=1500, rng=3)
    b = sample_feasible_set(s, 1, n_sample=1500, rng=3, cache_dir=tmp_path)
    c = sample_feasible_set(s, 1, n_sample=1500, rng=3, cache_dir=tmp_path)  # from cache
    for other in (b, c):
        assert np.array_equal(a.states, other.states)
        assert np.array_equal(a.sample_index, other.sample_index)
    assert not np.array_equal(a.states, sample_feasible_set(s, 1, n_sample=1500, rng=4).states)


def test_non_perturbable_actor_rejected(bus_scene):
    with pytest.raises(ValueError):
        sample_feasible_set(bus_scene, 1, n_sample=100)


def test_own_trajectory_is_plausible(suite):
    for s in suite:
        for a in s.actors:
            assert is_plausible(a.trajectory, s, a.id)


def test_translated_onto_expert():
    s = open_road_scene()
    states = np.array(s.sdv_expert.states)
    res = is_plausible(states, s, 1)
    assert not res and res.reason == "collides expert SDV @ 0"


def test_leaving_corridor_laterally():
    s = open_road_scene()
    states = np.array(s.actor(1).trajectory.states)
    states[5:, 1] += 3.0
    t_first = int(np.argmax(corridor_clearance(states[:, :2]) < 0))
    res = is_plausible(states, s, 1)
    assert not res and res.reason == f"off-road @ {t_first}"


def test_collides_other_actor():
    s = scene([_actor(1, speed_profile_states(20.0, W, 8.0)), _actor(2, speed_profile_states(40.0, W, 8.0))],
              sdv_x=-60.0)
    states = np.array(s.actor(2).trajectory.states)
    assert is_plausible(states, s, 1).reason == "collides actor 2 @ 0"


def test_horizon_mismatch_raises():
    s = open_road_scene()
    with pytest.raises(ValueError):
        is_plausible(np.zeros((5, 6)), s, 1)


def tiny_set(states):
    states = np.asarray(states, dtype=float)
    n = len(states)
    return FeasibleSet(1, states, np.zeros((n, 24)), np.arange(n), 0, n)


def test_projection_examples():
    rng = np.random.default_rng(0)
    members = rng.normal(size=(10, 12, 6))
    fs = tiny_set(members)
    assert project_index(members[4], fs) == 4
    # equidistant from members 3 and 7
    members[3, :, :2] = 1.0
    members[7, :, :2] = -1.0
    members[[0, 1, 2, 4, 5, 6, 8, 9], :, :2] = 50.0
    fs = tiny_set(members)
    assert project_index(np.zeros((12, 6)), fs) == 3


def test_projection_equals_exhaustive_scan():
    s = open_road_scene()
    fs = sample_feasible_set(s, 1, n_sample=1500, rng=1)
    rng = np.random.default_rng(5)
    for _ in range(50):
        query = fs.states[rng.integers(len(fs))] + rng.normal(0, 2.0, (12, 6))
        best, best_d = None, np.inf
        for k in range(len(fs)):
            d = sum((query[t, 0] - fs.states[k, t, 0]) ** 2 + (query[t, 1] - fs.states[k, t, 1]) ** 2
                    for t in range(12))
            if d < best_d:
                best, best_d = k, d
        k = project_index(query, fs)
        assert k == best
        dists = projection_distances(query, fs)
        assert np.all(dists[k] <= dists)
        once = project(query, fs)
        assert project(once, fs) == once


def test_acceptance_monotone_in_obstacle_density():
    base = [_actor(1, speed_profile_states(20.0, W, 8.0))]
    extra = [_actor(2, speed_profile_states(35.0, W, 8.0)), _actor(3, speed_profile_states(25.0, -W, 8.0)),
             _actor(4, speed_profile_states(5.0, W, 8.0))]
    rates = []
    for k in range(3):
        s = scene(base + extra[: k + 1], sdv_x=-60.0)
        fs = sample_feasible_set(s, 1, n_sample=2000, rng=0, n_min=1)
        rates.append(fs.acceptance_rate)
    assert rates[0] >= rates[1] >= rates[2]


def test_selects_closest():
    s = scene([_actor(1, speed_profile_states(30.0, W, 8.0)), _actor(2, speed_profile_states(0.0, W, 8.0))])
    assert rank_actors(s) == [2, 1]
    assert select_perturbed_actors(s, 1) == [2]
    # with few samples the adjacent actor keeps < N_MIN members and is skipped
    assert select_perturbed_actors(s, 1, n_sample=1000) == [1]


def test_boxed_in_closest_falls_back_to_next():
    s = boxed_in_scenario()
    far = _actor(7, speed_profile_states(80.0, W, 0.0))
    s = Scenario(s.map, s.actors + (far,), s.sdv_expert, name="boxed_plus")
    assert rank_actors(s)[0] == 1
    assert select_perturbed_actors(s, 1, n_sample=1000) == [7]
    with pytest.raises(ActorSelectionError, match="only 1 feasible"):
        select_perturbed_actors(s, 2, n_sample=1000)


def test_two_nearest_of_three():
    positions = {1: (40.0, W), 2: (-15.0, -W), 3: (12.0, W)}
    s = scene([_actor(i, speed_profile_states(x, y, 8.0)) for i, (x, y) in positions.items()])
    sdv = s.sdv_expert.xy
    by_hand = sorted(positions, key=lambda i: min(
        np.hypot(*(s.actor(i).trajectory.xy[t] - sdv[t])) for t in range(s.horizon)))
    chosen = select_perturbed_actors(s, 2)
    assert chosen == by_hand[:2]
    assert chosen == select_perturbed_actors(s, 2)


def test_m_must_be_positive():
    with pytest.raises(ValueError):
        select_perturbed_actors(open_road_scene(), 0)
