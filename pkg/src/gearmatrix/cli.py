"""Command-line entry point: ``gearmatrix <command> ...``.

Exit codes:
  0  success (plan solved / plan valid and targets met / claim holds)
  1  usage, parse or specification error
  2  planner did not solve the scenario (unsolvable or budget exhausted)
  3  plan replays validly but leaves some target unmet
  4  plan is invalid (first failing step reported)
  5  oracle state space exceeds the search guard
  6  oracle claim does not hold
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import CostModel, GearError, GridConfig
from .harness import ExperimentSpec, run_experiment, write_records_csv, write_summary_csv
from .io import FormatError, command_script, dump_json, load_plan, load_scenario, plan_to_json
from .oracle import StateSpaceTooLarge, check_capacity, check_checkerboard, check_g2, check_swap
from .planner import PlannerParams, PlanningFailed, makespan, plan, validate_plan

EXIT_OK, EXIT_USAGE, EXIT_UNSOLVED, EXIT_UNMET, EXIT_INVALID, EXIT_TOO_LARGE, EXIT_REFUTED = range(7)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def cmd_plan(args) -> int:
    sc = load_scenario(args.scenario)
    params = PlannerParams(
        mode=args.mode,
        seed=args.seed,
        max_expansions=args.max_expansions,
        step_budget=args.step_budget,
        successor_cap=args.successor_cap,
    )
    code = EXIT_OK
    try:
        result = plan(sc, params)
    except PlanningFailed as exc:
        print(f"not solved: {exc}", file=sys.stderr)
        result = exc.partial
        code = EXIT_UNSOLVED
    if result is not None:
        doc = dump_json(plan_to_json(result), args.out)
        if args.out is None:
            sys.stdout.write(doc)
        print(f"step_count {result.step_count}")
        print(f"total_cost {result.total_cost:.3f}")
        print(f"makespan_s {makespan(result, sc.config, sc.cost_model):.3f}")
    return code


def cmd_verify(args) -> int:
    sc = load_scenario(args.scenario)
    p = load_plan(args.plan)
    rep = validate_plan(sc, p)
    if not rep.valid:
        print(f"invalid at step {rep.failing_step}: {rep.error}")
        return EXIT_INVALID
    if not rep.targets_met:
        print("valid, targets not met")
        return EXIT_UNMET
    print(f"valid, targets met in {p.step_count} steps")
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        if args.check == "g2":
            rep = check_g2()
        elif args.check == "swap":
            rep = check_swap(args.rows or 2, args.cols or 3, args.channels or 1)
        elif args.check == "checkerboard":
            rep = check_checkerboard(
                GridConfig(args.rows or 3, args.cols or 3, args.channels or 1), pairs=args.pairs, seed=args.seed
            )
        else:
            rep = check_capacity(GridConfig(args.rows or 3, args.cols or 3, args.channels or 4), args.trials, args.seed)
    except StateSpaceTooLarge as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_TOO_LARGE
    print(json.dumps(rep.to_json(), indent=2))
    return EXIT_OK if rep.holds else EXIT_REFUTED


def cmd_experiment(args) -> int:
    params = PlannerParams(step_budget=args.step_budget)
    if args.kind == "grid-size":
        spec = ExperimentSpec("grid_size", args.sizes, channels=args.channels, sensors=args.sensors,
                              trials=args.trials, seed=args.seed, params=params)
    else:
        spec = ExperimentSpec("population", args.counts, channels=args.channels, grid=args.grid,
                              trials=args.trials, seed=args.seed, params=params)
    records, summary = run_experiment(spec, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_records_csv(out / "records.csv", records, with_runtime=args.timing)
    write_summary_csv(out / "summary.csv", summary)
    for row in summary:
        print(f"{row.key:>4}  mean {row.mean_steps:8.3f}  std {row.std_steps:8.3f}  solved {row.solved_fraction:.3f}")
    return EXIT_OK


def cmd_export(args) -> int:
    p = load_plan(args.plan)
    if args.scenario:
        sc = load_scenario(args.scenario)
        cfg, cm, start = sc.config, sc.cost_model, sc.start
    else:
        cfg, cm, start = GridConfig(1, 1, args.channels), CostModel(), None
    text = command_script(p, cfg, cm, start)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gearmatrix", description=__doc__.splitlines()[0],
                 formatter_class=argparse.RawDescriptionHelpFormatter, epilog=__doc__.split("\n", 1)[1])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="plan a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--mode", choices=("exact", "greedy"), default="greedy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--max-expansions", type=int, default=1_000_000)
    p.add_argument("--step-budget", type=int)
    p.add_argument("--successor-cap", type=int, default=256)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="replay a plan against a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force checks of the reachability claims")
    p.add_argument("--check", required=True, choices=("g2", "swap", "checkerboard", "capacity"))
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--trials", type=int, default=16)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="run a scaling experiment")
    p.add_argument("kind", choices=("grid-size", "population"))
    p.add_argument("--sizes", type=_int_list, default=(2, 4, 8, 16, 32, 64))
    p.add_argument("--counts", type=_int_list, default=(1, 2, 4, 8, 16, 20))
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--sensors", type=int, default=4)
    p.add_argument("--grid", type=int, default=3)
    p.add_argument("--trials", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-budget", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="fill runtime_ms (breaks byte-reproducibility)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("export", help="turn a plan into a timed command script")
    p.add_argument("--plan", required=True)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--scenario", help="adds source slots and the scenario's cost model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, GearError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
