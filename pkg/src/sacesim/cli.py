"""Command-line interface.

Exit codes: 0 on success, 2 on validation errors (bad plan, bad arguments),
3 on execution failures.
"""

from __future__ import annotations

import argparse
import sys

from .config import PlanValidationError, load_run_plan, plan_n_sim, restrict_plan
from .runner import (
    ExecutionError,
    emit_plot_data,
    export_results,
    read_records_csv,
    run_grid,
    summarize_records,
    write_analyzed_csv,
    write_bounds_csv,
    write_estimands_csv,
    write_summary_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_EXECUTION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sacesim",
        description="Simulation study of treatment-effect estimators for "
                    "trial outcomes truncated by death.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a study from a plan file")
    run.add_argument("--plan", required=True, help="path to a TOML run plan")
    run.add_argument("--out", required=True, help="output directory for CSV exports")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--workers", type=int, default=1, help="worker processes")
    run.add_argument("--scenarios", default=None,
                     help="comma-separated scenario ids to run (default: all)")
    run.add_argument("--nsim", type=int, default=None,
                     help="override the number of simulations per scenario")

    nsim = sub.add_parser("plan-nsim", help="replication count for a target accuracy")
    nsim.add_argument("--sigma", type=float, required=True,
                      help="anticipated standard error of one estimate")
    nsim.add_argument("--delta", type=float, required=True,
                      help="acceptable Monte Carlo error of the mean estimate")
    nsim.add_argument("--alpha", type=float, required=True, help="significance level")

    summarize = sub.add_parser("summarize",
                               help="recompute summaries offline from a records CSV")
    summarize.add_argument("--records", required=True, help="path to records.csv")
    summarize.add_argument("--out", required=True, help="output directory")
    summarize.add_argument("--level", type=float, default=0.95,
                           help="confidence level for summary intervals")
    return parser


def _cmd_run(args) -> int:
    try:
        plan = load_run_plan(args.plan)
        scenario_ids = args.scenarios.split(",") if args.scenarios else None
        plan = restrict_plan(plan, scenario_ids=scenario_ids, n_sim=args.nsim,
                             master_seed=args.seed)
    except FileNotFoundError:
        print(f"error: plan file not found: {args.plan}", file=sys.stderr)
        return EXIT_VALIDATION
    except PlanValidationError as exc:
        print(f"error: invalid plan: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    total_cells = len(plan.scenarios) * plan.n_sim
    print(f"running {len(plan.scenarios)} scenario(s) x {plan.n_sim} simulations "
          f"({total_cells} cells) with {args.workers} worker(s), "
          f"seed {plan.master_seed}")
    milestone = max(1, total_cells // 20)

    def on_progress(done: int, total: int) -> None:
        if done % milestone == 0 or done == total:
            print(f"  {done}/{total} cells complete")

    try:
        result = run_grid(plan, workers=args.workers, on_progress=on_progress)
        paths = export_results(result, args.out)
        plot_paths = emit_plot_data(result, args.out)
    except ExecutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXECUTION
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_EXECUTION

    for name, path in {**paths, **plot_paths}.items():
        print(f"wrote {name}: {path}")
    print(f"done in {result.provenance['duration_seconds']:.1f}s")
    return EXIT_OK


def _cmd_plan_nsim(args) -> int:
    try:
        n = plan_n_sim(args.sigma, args.delta, args.alpha)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(n)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    try:
        records = read_records_csv(args.records)
        if not records:
            print("error: records file contains no rows", file=sys.stderr)
            return EXIT_VALIDATION
    except FileNotFoundError:
        print(f"error: records file not found: {args.records}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, KeyError) as exc:
        print(f"error: cannot parse records: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        estimands, summaries, analyzed, bounds_rows = summarize_records(
            records, level=args.level)
        import os

        os.makedirs(args.out, exist_ok=True)
        write_summary_csv(summaries, os.path.join(args.out, "summary.csv"))
        write_estimands_csv(estimands, os.path.join(args.out, "estimands.csv"))
        write_analyzed_csv(analyzed, os.path.join(args.out, "analyzed.csv"))
        write_bounds_csv(bounds_rows, os.path.join(args.out, "bounds_summary.csv"))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_EXECUTION
    print(f"wrote summaries for {len(estimands)} scenario(s) to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "plan-nsim":
        return _cmd_plan_nsim(args)
    return _cmd_summarize(args)


if __name__ == "__main__":
    sys.exit(main())
