# main.py

import argparse
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

from harness.config import DEFAULT_CONFIG_FILE, RESULTS_DIR
from harness.models import CSV_COLUMNS, EstimateKind
from harness.runner import (
    coefficients_for, commutators_command, convergence_command, derived_payload, norms_command, probe_command,
    run_sweep, solve_command,
)
from utils.data_processing import (
    Command, RunConfig, load_run_config, save_grid_function, write_csv, write_json, write_resolved_config,
)
from utils.errors import HestonError, PropertyCheckFailure
from utils.visualization import render_sweep_table

logger = logging.getLogger("heston")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Degenerate Heston operator: validation, solves, weighted norms and a priori estimate checks"
    )
    parser.add_argument("command", nargs="?", choices=[c.value for c in Command],
                        help="Overrides the command named in the config")
    parser.add_argument("--config", type=str, default=DEFAULT_CONFIG_FILE,
                        help="JSON run configuration (default: data/configs/manufactured_solve.json)")
    parser.add_argument("--out", type=str, default=None, help="Output directory (default: results/<command>)")
    parser.add_argument("--threads", type=int, default=1, help="Workers for the sweep (default: 1)")
    parser.add_argument("--seed", type=int, default=None, help="Seed for sampling-based checks")
    parser.add_argument("--kind", type=str, action="append", choices=[k.value for k in EstimateKind],
                        help="Estimate kind for sweep; repeat for several")
    parser.add_argument("--timings", action="store_true", help="Record runtime_ms in sweep.csv")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config)
    update = {}
    if args.command:
        update["command"] = Command(args.command)
    if args.seed is not None:
        update["seed"] = args.seed
    if args.kind:
        update["estimate"] = config.estimate.model_copy(update={"kinds": [EstimateKind(k) for k in args.kind]})
    if args.out:
        update["output"] = config.output.model_copy(update={"directory": args.out})
    return config.model_copy(update=update) if update else config


def execute(config: RunConfig, out_dir: str, threads: int = 1, timings: bool = False) -> None:
    """Run the configured command and write its artifacts into out_dir."""
    write_resolved_config(config, out_dir)
    command = config.command
    seed = config.seed

    if command == Command.VALIDATE:
        payload = derived_payload(coefficients_for(config))
        write_json(payload, out_dir, "derived.json")
        logger.info("coefficients valid: beta=%.6g, nu0=%.6g", payload["beta"], payload["nu0"])
        return

    if command == Command.SOLVE:
        problem, errors = solve_command(config)
        save_grid_function(problem.u, os.path.join(out_dir, "solution.grid"))
        write_csv(errors, out_dir, "errors.csv")
        return

    if command == Command.NORMS:
        write_csv(norms_command(config, seed), out_dir, "norms.csv")
        return

    if command == Command.COMMUTATORS:
        tables, failures = commutators_command(config, seed)
        write_csv(tables["commutators"], out_dir, "commutators.csv")
        write_csv(tables["ellipticity"], out_dir, "ellipticity.csv")
        write_csv(tables["geometry"], out_dir, "geometry.csv")
        if failures:
            raise PropertyCheckFailure(f"violations in: {', '.join(failures)}")
        return

    if command == Command.SWEEP:
        outcome = run_sweep(config, threads=threads, seed=seed, timings=timings)
        write_csv(outcome.table, out_dir, "sweep.csv", columns=CSV_COLUMNS)
        if not outcome.table.empty:
            with open(os.path.join(out_dir, "sweep.html"), "w") as f:
                f.write(render_sweep_table(outcome.table, outcome.verdicts))
        if outcome.failures:
            raise PropertyCheckFailure("; ".join(outcome.failures))
        return

    if command == Command.CONVERGENCE:
        write_csv(convergence_command(config), out_dir, "convergence.csv")
        return

    if command == Command.PROBE:
        table, failures = probe_command(config)
        write_csv(table, out_dir, "probe.csv")
        if failures:
            raise PropertyCheckFailure("; ".join(failures))
        return


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.threads < 1:
        print("ConfigError: --threads must be at least 1", file=sys.stderr)
        return 1
    try:
        config = resolve_config(args)
        out_dir = config.output.directory or os.path.join(RESULTS_DIR, config.command.value)
        execute(config, out_dir, threads=args.threads, timings=args.timings)
    except ValidationError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 1
    except HestonError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
