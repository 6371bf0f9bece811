"""Attack benchmarks: algorithm comparison, actor-count sweep, objective ablation, transfer.

Every table is built from per-(scenario, cell) rows; a cell that raises is
kept as a failed row and left out of the aggregates.
"""

from __future__ import annotations

import logging
import time
from dataclasses import replace

import numpy as np

from ..adversary.attack import AttackConfig, attack, replay
from ..adversary.objective import MASKS
from ..adversary.optimizers import ALGORITHMS
from ..autonomy.stacks import STACK_KINDS, make_stack
from .metrics import METRIC_FIELDS, score

logger = logging.getLogger(__name__)


class StackPool:
    """One stack instance per kind so simulator caches survive across cells."""

    def __init__(self, planner=None):
        self.planner = planner
        self._stacks = {}

    def __getitem__(self, kind):
        if kind not in self._stacks:
            self._stacks[kind] = make_stack(kind, self.planner)
        return self._stacks[kind]


def run_cell(scenario, config: AttackConfig, pool: StackPool | None = None, **labels) -> tuple[dict, object]:
    """Attack one scenario and score the original and adversarial plans.

    Returns ``(row, result)``; ``result`` is None when the cell failed.
    """
    pool = pool or StackPool()
    row = {"scenario": scenario.name, **labels}
    start = time.perf_counter()
    try:
        result = attack(scenario, config, stack=pool[config.stack])
    except Exception as exc:  # a failed cell must not sink the table
        logger.warning("cell %s %s failed: %s", scenario.name, labels, exc)
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return row, None
    original = score(result.baseline.info.plan, scenario)
    adversarial = score(result.plan, result.perturbed)
    row.update(status="ok", error="", n_queries=len(result.record), best_value=result.record.best_value,
               best_query=result.record.best_index + 1, wall_time=time.perf_counter() - start)
    row.update({f"orig_{k}": v for k, v in original.items()})
    row.update({f"adv_{k}": v for k, v in adversarial.items()})
    return row, result


def aggregate(rows: list[dict], key: str) -> list[dict]:
    """Mean adversarial metrics per value of ``key`` over successful rows, plus an Original row."""
    ok = [r for r in rows if r.get("status") == "ok"]
    if not ok:
        return []
    table = [{key: "Original", **{k: float(np.mean([r[f"orig_{k}"] for r in ok])) for k in METRIC_FIELDS},
              "n_queries": "", "n_scenarios": len({r["scenario"] for r in ok})}]
    for value in dict.fromkeys(r[key] for r in ok):
        sel = [r for r in ok if r[key] == value]
        entry = {key: value}
        entry.update({k: float(np.mean([r[f"adv_{k}"] for r in sel])) for k in METRIC_FIELDS})
        entry["n_queries"] = float(np.mean([r["n_queries"] for r in sel]))
        entry["n_scenarios"] = len(sel)
        table.append(entry)
    return table


def _sweep(scenarios, configs: dict, key: str, planner=None):
    pool = StackPool(planner)
    rows = []
    for scenario in scenarios:
        for label, cfg in configs.items():
            row, _ = run_cell(scenario, cfg, pool, **{key: label})
            rows.append(row)
    return rows, aggregate(rows, key)


def compare_algorithms(scenarios, algorithms=tuple(ALGORITHMS), base: AttackConfig | None = None,
                       budget=None, planner=None):
    """Rows and aggregate table per algorithm; ``budget`` overrides every algorithm's schedule."""
    base = base or AttackConfig()
    configs = {a: replace(base, algorithm=a, budget=budget, hyperparams={}) for a in algorithms}
    return _sweep(scenarios, configs, "algorithm", planner)


def actor_count_sweep(scenarios, ms=(1, 2, 3), base: AttackConfig | None = None, planner=None):
    base = base or AttackConfig()
    return _sweep(scenarios, {m: replace(base, m=m) for m in ms}, "m", planner)


def objective_ablation(scenarios, masks=tuple(MASKS), base: AttackConfig | None = None, planner=None):
    base = base or AttackConfig()
    return _sweep(scenarios, {mk: replace(base, mask=mk) for mk in masks}, "mask", planner)


def transfer_matrix(scenarios, stacks=STACK_KINDS, base: AttackConfig | None = None, planner=None):
    """Attack with each source stack, replay the winner on every target stack.

    Returns ``(rows, matrix)`` where ``matrix[source][target]`` holds mean
    collision@5s and l2_human@5s over the scenarios whose source attack
    succeeded.
    """
    base = base or AttackConfig()
    pool = StackPool(planner)
    rows = []
    for scenario in scenarios:
        for src in stacks:
            try:
                result = attack(scenario, replace(base, stack=src), stack=pool[src])
            except Exception as exc:
                logger.warning("transfer source %s on %s failed: %s", src, scenario.name, exc)
                rows.append({"scenario": scenario.name, "source": src, "target": "", "status": "failed",
                             "error": f"{type(exc).__name__}: {exc}"})
                continue
            for tgt in stacks:
                plan = result.plan if tgt == src else replay(result, pool[tgt])
                m = score(plan, result.perturbed)
                rows.append({"scenario": scenario.name, "source": src, "target": tgt, "status": "ok", "error": "",
                             "collision@5s": m["collision@5s"], "l2_human@5s": m["l2_human@5s"]})
    matrix = {}
    for src in stacks:
        matrix[src] = {}
        for tgt in stacks:
            sel = [r for r in rows if r["status"] == "ok" and r["source"] == src and r["target"] == tgt]
            matrix[src][tgt] = {
                k: float(np.mean([r[k] for r in sel])) if sel else float("nan")
                for k in ("collision@5s", "l2_human@5s")
            }
    return rows, matrix


def matrix_rows(matrix: dict, metric: str = "collision@5s") -> list[dict]:
    """Flatten a transfer matrix into one row per source stack."""
    return [{"source": src, **{tgt: cells[tgt][metric] for tgt in cells}} for src, cells in matrix.items()]
