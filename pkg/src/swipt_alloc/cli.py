"""Command-line entry point: run sweeps, validate configs, run oracles."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .channel import realization_rng
from .config import ConfigError, ScenarioConfig, validate_config
from .harness import EXPERIMENTS, SweepSpec, run_sweep
from .oracle import GridSpec, PatternBudgetExceeded, oracle_ee_max, oracle_eh_max, oracle_rate_max
from .scenarios import build_ee_scenario, build_eh_scenario, build_multicell_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swipt-alloc",
                                     description="Resource allocation sweeps for SWIPT-enabled OFDMA networks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep and write CSV")
    run.add_argument("--config", required=True)
    run.add_argument("--experiment", required=True, choices=sorted(EXPERIMENTS))
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=1, help="master seed")
    run.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    run.add_argument("--realizations", type=int, default=None,
                     help="override the config's realization count")
    run.add_argument("--values", default=None,
                     help="comma-separated sweep values (default: the experiment's)")
    run.add_argument("--methods", default=None, help="comma-separated method tags")
    run.add_argument("--oracle", action="store_true",
                     help="also run the brute-force oracle per realization (tiny instances only)")

    val = sub.add_parser("validate", help="validate a scenario config")
    val.add_argument("--config", required=True)
    val.add_argument("--experiment", default=None, choices=sorted(EXPERIMENTS))

    orc = sub.add_parser("oracle", help="brute-force reference on a tiny config")
    orc.add_argument("--config", required=True)
    orc.add_argument("--chapter", choices=("eh", "rate", "ee"), default="eh")
    orc.add_argument("--seed", type=int, default=1)
    orc.add_argument("--realization", type=int, default=0)
    orc.add_argument("--levels", type=int, default=64)
    return parser


def _oracle_value(cfg: ScenarioConfig, chapter: str, seed: int, realization: int, levels: int) -> tuple[str, float]:
    rng = realization_rng(seed, realization)
    grid = GridSpec(power_levels=levels)
    if chapter == "eh":
        alloc = oracle_eh_max(build_eh_scenario(cfg, rng), grid)
        return "eh_w", alloc.harvested_w if alloc.feasible else float("nan")
    if chapter == "rate":
        alloc = oracle_rate_max(build_multicell_scenario(cfg, rng), grid)
        return "total_rate", alloc.total_rate if alloc.feasible else float("nan")
    alloc = oracle_ee_max(build_ee_scenario(cfg, rng), grid)
    return "ee_bits_per_joule", alloc.ee_value if alloc.feasible else float("nan")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = validate_config(args.config, getattr(args, "experiment", None))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "validate":
        print(f"config ok: {args.config}")
        return EXIT_OK

    if args.command == "oracle":
        try:
            metric, value = _oracle_value(cfg, args.chapter, args.seed, args.realization, args.levels)
        except PatternBudgetExceeded as exc:
            print(f"oracle error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        if np.isnan(value):
            print("oracle: instance infeasible", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"oracle {args.chapter} {metric} = {value!r}")
        return EXIT_OK

    values: tuple = ()
    if args.values:
        exp = EXPERIMENTS[args.experiment]
        cast = type(exp.default_values[0])
        values = tuple(cast(float(v)) if cast is not float else float(v) for v in args.values.split(","))
    methods: tuple = tuple(args.methods.split(",")) if args.methods else ()
    spec = SweepSpec(
        experiment=args.experiment,
        sweep_values=values,
        realization_count=args.realizations or cfg.num_realizations,
        master_seed=args.seed,
        methods=methods,
        workers=max(1, args.workers),
    )
    try:
        spec = spec.resolved()
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    summary = run_sweep(spec, cfg, args.out)
    if args.oracle:
        chapter = EXPERIMENTS[args.experiment].chapter
        for r in range(spec.realization_count):
            metric, value = _oracle_value(cfg, chapter, spec.master_seed, r, 64)
            print(f"# oracle,{chapter},{r},{metric},{value!r}")
    feasible_points = sum(1 for _ in summary)
    print(f"wrote {args.out} ({feasible_points} summary points)")
    if not summary:
        print("all realizations infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
