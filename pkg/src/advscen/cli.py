"""Command line entry point: ``advscen {curate,attack,benchmark,transfer,plot}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .adversary.attack import AttackConfig, attack, record_rows
from .adversary.objective import MASKS
from .adversary.optimizers import ALGORITHMS
from .autonomy.stacks import STACK_KINDS
from .evaluation import benchmark as bench
from .evaluation.curate import STRIDE_STEPS, curate
from .evaluation.metrics import score, to_csv
from .scenario import load_scenario, save_scenario
from .sensorsim import dump_sweep
from .toy import shipped_suite


def _attack_options(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML/JSON attack config; flags below override it")
    p.add_argument("--algo", choices=sorted(ALGORITHMS, key=str.lower), type=_algo_name)
    p.add_argument("--budget", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--mask", choices=sorted(MASKS))
    p.add_argument("--stack", choices=STACK_KINDS)
    p.add_argument("--n-sample", type=int)


def _algo_name(text: str) -> str:
    lookup = {k.lower(): k for k in ALGORITHMS}
    key = text.lower().replace("-", "").replace("_", "")
    return lookup.get("bandittd" if key == "bandit" else key, text)


def _config(args) -> AttackConfig:
    cfg = AttackConfig.from_file(args.config) if args.config else AttackConfig()
    overrides = {
        "algorithm": args.algo, "budget": args.budget, "m": args.m, "mask": args.mask, "stack": args.stack,
        "n_sample": args.n_sample, "seed": args.seed,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "algorithm" in overrides and overrides["algorithm"] != cfg.algorithm:
        overrides["hyperparams"] = {}
    return replace(cfg, **overrides)


def _scenarios(args):
    out = [load_scenario(p) for p in args.scenarios]
    if args.suite:
        out.extend(shipped_suite())
    return out


def _emit(text: str, out_dir, name: str):
    sys.stdout.write(text)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / name).write_text(text)


def cmd_curate(args) -> int:
    log = load_scenario(args.log, check_collisions=False)
    result = curate(log, args.seed or 0)
    rows = [{"start": i * STRIDE_STEPS, "score": s} for i, s in enumerate(result.scores)]
    sys.stdout.write(to_csv(rows))
    print(f"# selected window start={result.start} score={result.best_score:.4f}")
    if args.out:
        save_scenario(result.scenario, args.out)
    return 0


def cmd_attack(args) -> int:
    scenario = load_scenario(args.scenario)
    cfg = _config(args)
    result = attack(scenario, cfg)
    rows = record_rows(result.record)
    text = to_csv(rows)
    if args.record:
        Path(args.record).write_text(text)
    else:
        sys.stdout.write(text)
    metrics = score(result.plan, result.perturbed)
    print(f"# algorithm={cfg.algorithm} stack={cfg.stack} mask={cfg.mask} seed={cfg.seed} m={cfg.m}")
    print(f"# actors={result.actor_ids} queries={len(result.record)} best_query={result.record.best_index + 1} "
          f"best_value={result.record.best_value:.6g}")
    print("# " + " ".join(f"{k}={v:.4g}" for k, v in metrics.items()))
    if args.out:
        save_scenario(result.perturbed, args.out)
    if args.dump_sweeps:
        out = Path(args.dump_sweeps)
        out.mkdir(parents=True, exist_ok=True)
        for sw in result.sweeps:
            dump_sweep(sw, out / f"sweep_{sw.frame:02d}.txt")
    return 0


def cmd_benchmark(args) -> int:
    scenarios = _scenarios(args)
    base = _config(args)
    if args.table == "algorithms":
        algos = args.algorithms.split(",") if args.algorithms else list(ALGORITHMS)
        rows, table = bench.compare_algorithms(scenarios, [_algo_name(a) for a in algos], base, budget=args.budget)
    elif args.table == "m":
        rows, table = bench.actor_count_sweep(scenarios, [int(x) for x in args.ms.split(",")], base)
    else:
        rows, table = bench.objective_ablation(scenarios, base=base)
    _emit(to_csv(rows) if rows else "", args.out_dir, f"{args.table}_rows.csv")
    print()
    _emit(to_csv(table) if table else "", args.out_dir, f"{args.table}_table.csv")
    return 0


def cmd_transfer(args) -> int:
    scenarios = _scenarios(args)
    rows, matrix = bench.transfer_matrix(scenarios, base=_config(args))
    _emit(to_csv(rows) if rows else "", args.out_dir, "transfer_rows.csv")
    if scenarios:
        print()
        _emit(to_csv(bench.matrix_rows(matrix, "collision@5s")), args.out_dir, "transfer_collision.csv")
        print()
        _emit(to_csv(bench.matrix_rows(matrix, "l2_human@5s")), args.out_dir, "transfer_l2.csv")
    return 0


def cmd_plot(args) -> int:
    from .evaluation.plots import plot_best_so_far, plot_scenario
    from .adversary.optimizers import AttackRecord, Query

    if args.scenario:
        scenario = load_scenario(args.scenario)
        plot_scenario(scenario, args.out, title=scenario.name)
    if args.curves:
        records = {}
        for path in args.curves:
            with open(path) as fh:
                values = [float(r["value"]) for r in csv.DictReader(line for line in fh if not line.startswith("#"))]
            rec = AttackRecord(Path(path).stem, 1, len(values), [Query(None, v) for v in values])
            records[Path(path).stem] = rec
        target = args.curves_out or Path(args.out).with_name(Path(args.out).stem + "_curves.png")
        plot_best_so_far(records, target)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="advscen", description="Adversarial scenario generation for planners.")
    parser.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    seed_opt = argparse.ArgumentParser(add_help=False)
    seed_opt.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed (also accepted globally)")

    p = sub.add_parser("curate", parents=[seed_opt], help="pick the most interactive 6 s window of a log")
    p.add_argument("log")
    p.add_argument("--out", help="write the selected window here")
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("attack", parents=[seed_opt], help="attack one scenario")
    p.add_argument("scenario")
    _attack_options(p)
    p.add_argument("--out", help="write the worst-case scenario here")
    p.add_argument("--record", help="write the query history CSV here instead of stdout")
    p.add_argument("--dump-sweeps", metavar="DIR", help="write the winner's simulated sweeps here")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("benchmark", parents=[seed_opt],
                       help="algorithm comparison, actor-count sweep or objective ablation")
    p.add_argument("scenarios", nargs="*")
    p.add_argument("--suite", action="store_true", help="add the shipped toy suite")
    p.add_argument("--table", choices=("algorithms", "m", "ablation"), default="algorithms")
    p.add_argument("--algorithms", help="comma-separated subset for --table algorithms")
    p.add_argument("--ms", default="1,2,3", help="comma-separated actor counts for --table m")
    p.add_argument("--out-dir")
    _attack_options(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("transfer", parents=[seed_opt], help="attack with each stack, replay on every stack")
    p.add_argument("scenarios", nargs="*")
    p.add_argument("--suite", action="store_true", help="add the shipped toy suite")
    p.add_argument("--out-dir")
    _attack_options(p)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("plot", parents=[seed_opt], help="render a scenario and/or best-so-far curves from record CSVs")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--out", default="scenario.png")
    p.add_argument("--curves", nargs="*", help="record CSV files written by `attack --record`")
    p.add_argument("--curves-out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return int(args.func(args) or 0)


if __name__ == "__main__":
    sys.exit(main())
