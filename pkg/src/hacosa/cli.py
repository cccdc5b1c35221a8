"""Command line entry point: ``hacosa solve|bench|oracle``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import bench
from .aco import ENGINES, SolverParams, run_engine
from .bench import ConfigError, load_config, load_instance
from .oracle import MAX_ORACLE_CITIES, OracleTooLarge, brute_force
from .tour import Tour


def _kv(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hacosa", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one engine on one instance")
    p.add_argument("instance", help="TSPLIB file, or 'fig4' for the built-in 8-city example")
    p.add_argument("--engine", default="HACO-SA", choices=ENGINES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int)
    p.add_argument("--param", type=_kv, action="append", default=[], metavar="KEY=VALUE",
                   help="override any solver parameter (repeatable)")
    p.add_argument("--json", action="store_true", help="print the run report as JSON")

    p = sub.add_parser("bench", help="run a seeded experiment from a config file")
    p.add_argument("config")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed-base", type=int)
    p.add_argument("--tours", type=int, help="tour budget per run (equal-tours policy)")
    p.add_argument("--budget", choices=bench.BUDGETS)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help=f"output directory (default ${bench.OUTPUT_DIR_ENV} or ./results)")
    p.add_argument("--format", default="table", choices=bench.FORMATS)

    p = sub.add_parser("oracle", help=f"exhaustive optimum (n <= {MAX_ORACLE_CITIES})")
    p.add_argument("instance")
    return parser


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    overrides = dict(args.param)
    if args.iterations is not None:
        overrides["iterations"] = str(args.iterations)
    params = SolverParams.defaults(args.engine, seed=args.seed).with_overrides(overrides)
    bench.warm_up([params.engine])
    rep = run_engine(inst, params)
    if args.json:
        print(json.dumps(rep.to_dict()))
        return 0
    tour = Tour.from_order(inst, rep.best_order)
    print(f"instance   {inst.name} (n={inst.n}, {inst.metric})")
    print(f"engine     {rep.engine}  seed={rep.seed}")
    print(f"best       {rep.best_length}")
    print(f"time       {rep.wall_time:.3f} s  ({rep.iterations} iterations, {rep.tours_built} tours)")
    print(f"tour       {tour.to_line(inst)}")
    return 0


def cmd_bench(args) -> int:
    config = load_config(args.config)
    for name in ("runs", "seed_base", "tours", "budget", "workers"):
        value = getattr(args, name)
        if value is not None:
            setattr(config, name, value)
    config.__post_init__()
    out_dir = args.out or os.environ.get(bench.OUTPUT_DIR_ENV) or "results"

    def progress(rep):
        print(f"  {rep.instance:<10} {rep.engine:<8} seed={rep.seed:<4} "
              f"best={rep.best_length:<8} {rep.wall_time:.3f}s", file=sys.stderr)

    reports = bench.run_experiment(config, progress=progress)
    aggs = bench.aggregate(reports)
    bench.write_outputs(out_dir, aggs, reports)
    sys.stdout.write(bench.render(aggs, args.format, reports))
    print(f"results written to {out_dir}/", file=sys.stderr)
    return 0


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance)
    try:
        length, order = brute_force(inst)
    except OracleTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"optimum    {length}")
    print(f"tour       {Tour.from_order(inst, order).to_line(inst)}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"solve": cmd_solve, "bench": cmd_bench, "oracle": cmd_oracle}[args.command]
    try:
        return handler(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
