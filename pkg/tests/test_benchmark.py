import math

import numpy as np
import pytest

from advscen.adversary.attack import AttackConfig
from advscen.evaluation import benchmark as bench
from advscen.evaluation.metrics import METRIC_FIELDS
from advscen.toy import boxed_in_scenario

FAST = AttackConfig("RS", budget=6, stack="ground_truth")


def _strip(rows):
    return [{k: v for k, v in r.items() if k != "wall_time"} for r in rows]


def test_empty_scenario_list():
    assert bench.compare_algorithms([], base=FAST) == ([], [])
    assert bench.actor_count_sweep([], base=FAST) == ([], [])
    assert bench.objective_ablation([], base=FAST) == ([], [])
    rows, matrix = bench.transfer_matrix([], base=FAST)
    assert rows == []
    assert all(math.isnan(c["collision@5s"]) for cells in matrix.values() for c in cells.values())


def test_failed_cell_kept_out_of_aggregate(suite):
    rows, table = bench.actor_count_sweep([boxed_in_scenario(), suite[0]], ms=(2,), base=FAST)
    assert [r["status"] for r in rows] == ["failed", "ok"]
    assert "ActorSelectionError" in rows[0]["error"]
    assert table[0]["m"] == "Original" and table[0]["n_scenarios"] == 1
    assert table[1]["n_scenarios"] == 1


def test_aggregate_is_mean_of_rows(suite):
    rows, table = bench.compare_algorithms(suite[:3], ["RS", "GA"], FAST, budget=5)
    assert [r["algorithm"] for r in rows] == ["RS", "GA"] * 3
    assert [t["algorithm"] for t in table] == ["Original", "RS", "GA"]
    for entry in table[1:]:
        sel = [r for r in rows if r["algorithm"] == entry["algorithm"]]
        for k in METRIC_FIELDS:
            assert entry[k] == pytest.approx(np.mean([r[f"adv_{k}"] for r in sel]))
        assert entry["n_queries"] == 5
    for k in METRIC_FIELDS:
        assert table[0][k] == pytest.approx(np.mean([r[f"orig_{k}"] for r in rows]))


def test_reproducible(suite):
    a, ta = bench.compare_algorithms(suite[:2], ["RS"], FAST)
    b, tb = bench.compare_algorithms(suite[:2], ["RS"], FAST)
    assert _strip(a) == _strip(b) and ta == tb
    r1, m1 = bench.transfer_matrix(suite[:1], base=FAST)
    r2, m2 = bench.transfer_matrix(suite[:1], base=FAST)
    assert r1 == r2 and m1 == m2


def test_transfer_rows_shape(suite):
    rows, matrix = bench.transfer_matrix(suite[:2], base=FAST)
    assert len(rows) == 2 * 2 * 2
    flat = bench.matrix_rows(matrix)
    assert [r["source"] for r in flat] == ["ground_truth", "sensor"]
    assert set(flat[0]) == {"source", "ground_truth", "sensor"}


@pytest.fixture(scope="module")
def wcol_tables():
    from advscen.autonomy.planner import SamplingPlanner
    from advscen.toy import shipped_suite

    out = {}
    for w in (1000.0, 2000.0):
        rows, _ = bench.compare_algorithms(shipped_suite(), ["BO"], AttackConfig("BO"), budget=75,
                                           planner=SamplingPlanner(w_col=w))
        out[w] = {r["scenario"]: r["adv_collision@5s"] for r in rows}
    return out


@pytest.mark.slow
def test_doubled_collision_weight_never_hurts(wcol_tables):
    base, doubled = wcol_tables[1000.0], wcol_tables[2000.0]
    assert np.mean(list(doubled.values())) <= np.mean(list(base.values()))


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="collisions come from missed or misforecast actors the planner believes "
                                        "are clear of its path; a larger collision weight cannot change the argmin")
def test_doubled_collision_weight_strictly_lowers_collisions(wcol_tables):
    base, doubled = wcol_tables[1000.0], wcol_tables[2000.0]
    assert np.mean(list(doubled.values())) < np.mean(list(base.values()))
