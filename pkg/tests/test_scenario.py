import numpy as np
import pytest
import yaml

from advscen.rng import RandomSource
from advscen.scenario import (
    ScenarioFormatError,
    ScenarioValidationError,
    from_dict,
    load_scenario,
    save_scenario,
    to_dict,
)
from advscen.toy import TOY_SUITE, data_path, random_scenario, shipped_suite, toy_suite


def minimal_doc(n_states=12):
    states = [[i * 0.5, 0.0, 0.0, 1.0, 0.0, 0.0] for i in range(n_states)]
    actor = [[20.0 + i * 0.5, 0.0, 0.0, 1.0, 0.0, 0.0] for i in range(n_states)]
    return {
        "version": 1,
        "dt": 0.5,
        "n_history": 2,
        "n_future": 10,
        "map": {"lanes": [{"id": 0, "width": 3.5, "centerline": [[-10.0, 0.0], [100.0, 0.0]]}]},
        "sdv_expert": {"states": [[i * 0.5, 0.0, 0.0, 1.0, 0.0, 0.0] for i in range(12)]},
        "actors": [{"id": 1, "length": 4.5, "width": 2.0, "states": actor}],
    }


def test_minimal_file(tmp_path):
    p = tmp_path / "min.yaml"
    p.write_text(yaml.safe_dump(minimal_doc()))
    s = load_scenario(p)
    assert (s.n_history, s.n_future, s.dt) == (2, 10, 0.5)
    assert len(s.actors) == 1 and s.horizon == 12
    assert s.name == "min"


def test_state_count_mismatch(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump(minimal_doc(n_states=11)))
    with pytest.raises(ScenarioValidationError, match="state count mismatch"):
        load_scenario(p)


@pytest.mark.parametrize("path, expected", [
    (("version",), "version"),
    (("map",), "map"),
    (("actors",), "actors"),
])
def test_missing_field_is_named(path, expected):
    doc = minimal_doc()
    del doc[path[0]]
    with pytest.raises(ScenarioFormatError, match=expected):
        from_dict(doc)


def test_wrong_type_is_named():
    doc = minimal_doc()
    doc["actors"][0]["id"] = "one"
    with pytest.raises(ScenarioFormatError, match=r"actors\[0\]\.id"):
        from_dict(doc)


def test_duplicate_ids_rejected():
    doc = minimal_doc()
    second = dict(doc["actors"][0], states=[[40.0 + i, 0, 0, 1, 0, 0] for i in range(12)])
    doc["actors"].append(second)
    with pytest.raises(ScenarioValidationError, match="duplicate"):
        from_dict(doc)


def test_collision_with_expert_rejected():
    doc = minimal_doc()
    doc["actors"][0]["states"] = doc["sdv_expert"]["states"]
    with pytest.raises(ScenarioValidationError, match="collides"):
        from_dict(doc)


def test_round_trip_random_scenarios(tmp_path):
    source = RandomSource(7)
    for i in range(50):
        s = random_scenario(source.stream(f"scene-{i}"), buildings=bool(i % 2))
        p = save_scenario(s, tmp_path / f"s{i}.yaml")
        back = load_scenario(p)
        assert back == s
        assert to_dict(back) == to_dict(s)


def test_shipped_suite_matches_builders():
    assert [s.name for s in shipped_suite()] == list(TOY_SUITE)
    assert shipped_suite() == toy_suite()
    assert data_path("grid_oracle.json").is_file()


def test_same_seed_same_scenario():
    a = random_scenario(RandomSource(3).stream("x"))
    b = random_scenario(RandomSource(3).stream("x"))
    assert a == b
    assert a.digest() == b.digest()


def test_with_trajectories_replaces_only_named(suite):
    s = suite[0]
    new = np.array(s.actors[0].trajectory.states)
    new[:, 1] += 0.1
    out = s.with_trajectories({s.actors[0].id: new})
    assert not np.array_equal(out.actors[0].trajectory.states, s.actors[0].trajectory.states)
    assert out.actors[1] == s.actors[1]


def test_on_road_corridor(suite):
    m = suite[0].map
    assert m.on_road([[0.0, 0.0], [0.0, 5.25]]).tolist() == [True, True]
    assert not m.on_road([[0.0, 5.3]])[0]
