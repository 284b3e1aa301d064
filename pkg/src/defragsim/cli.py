"""Command-line experiment runner.

Subcommands:
  run       execute every (algorithm, load, seed) cell of a config
  sweep     re-run the config along one axis (load, oversubscription,
            threshold) and collect a grid of summaries
  validate  parse and validate a config, printing the resolved values
  oracle    run the brute-force minimum-move oracle on a solver
            instance file and compare it with the exact solver

Exit status: 0 on success, 2 on configuration errors, 3 on internal
invariant violations.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .defrag import (
    InfeasibleError, OracleTooLargeError, brute_force_min_moves,
    load_instance, solve,
)
from .metrics import export_run, write_summary
from .simulate import ALGORITHMS, run_simulation
from .workload import generate_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _run_cells(config: ExperimentConfig, out_dir: Path,
               algorithms: list[str], loads: list[float],
               threshold: float | None = None):
    """Run every (load, seed, algorithm) cell; return summary rows."""
    topology = config.topology.build()
    trace_cfg = config.trace.trace_config()
    if threshold is None:
        threshold = config.controller.threshold
    summaries = []
    for load in loads:
        for run_index in range(config.trace.num_seeds):
            seed = config.trace.base_seed + run_index
            trace = generate_trace(topology, load, seed=seed,
                                   num_jobs=config.trace.num_jobs,
                                   cfg=trace_cfg)
            for algorithm in algorithms:
                result = run_simulation(
                    topology, trace, algorithm, threshold=threshold,
                    solver_time_limit=config.controller.solver_time_limit,
                    max_moves=config.controller.max_moves,
                    check_isolation=True)
                summary = export_run(result, load, out_dir)
                summaries.append(summary)
                print(f"{algorithm} load={load:g} seed={seed}: "
                      f"mean={summary.mean_slowdown:.4f} "
                      f"p99={summary.p99_slowdown:.4f} "
                      f"migrations={summary.total_migrations}")
    return summaries


def cmd_run(args) -> int:
    config = load_config(args.config)
    algorithms = (args.algorithms.split(",") if args.algorithms
                  else config.algorithms)
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise ConfigError(f"unknown algorithm(s): {', '.join(unknown)}")
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError("--seeds must be at least 1")
        config.trace.num_seeds = args.seeds
    out_dir = Path(args.out or config.output_dir)
    summaries = _run_cells(config, out_dir, algorithms, config.trace.loads)
    write_summary(summaries, out_dir / "summary.json")
    print(f"wrote {len(summaries)} run(s) to {out_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    values = config.sweep.axis_values(args.axis)
    base_out = Path(args.out or config.output_dir)
    grid = []
    for value in values:
        cell_config = load_config(args.config)  # fresh copy per cell
        threshold = None
        loads = cell_config.trace.loads
        if args.axis == "load":
            loads = [value]
        elif args.axis == "oversubscription":
            # oversubscription = aggregate NIC capacity / uplink capacity
            nic_total = (cell_config.topology.hosts_per_rack
                         * cell_config.topology.gpus_per_host
                         * cell_config.topology.nic_bandwidth_gbps)
            cell_config.topology.uplink_bandwidth_gbps = nic_total / (
                cell_config.topology.uplinks_per_tor * value)
        elif args.axis == "threshold":
            threshold = value
        out_dir = base_out / f"sweep_{args.axis}" / f"{value:g}"
        summaries = _run_cells(cell_config, out_dir, cell_config.algorithms,
                               loads, threshold=threshold)
        write_summary(summaries, out_dir / "summary.json")
        grid.append({"axis": args.axis, "value": value,
                     "runs": [s.as_dict() for s in summaries]})
    grid_path = base_out / f"sweep_{args.axis}.json"
    grid_path.parent.mkdir(parents=True, exist_ok=True)
    with open(grid_path, "w") as f:
        json.dump({"cells": grid}, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {len(grid)} sweep cell(s) to {grid_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = load_config(args.config)
    print(json.dumps(dataclasses.asdict(config), indent=2, sort_keys=True))
    print("config OK")
    return EXIT_OK


def cmd_oracle(args) -> int:
    instance = load_instance(args.instance)
    try:
        optimum = brute_force_min_moves(instance)
    except InfeasibleError:
        print("infeasible: no placement satisfies the threshold")
        return EXIT_OK
    except OracleTooLargeError as exc:
        print(f"instance too large for exhaustive enumeration: {exc}",
              file=sys.stderr)
        return EXIT_CONFIG
    plan = solve(instance, time_limit=args.time_limit)
    print(f"oracle minimum moves: {optimum}")
    print(f"solver moves: {plan.move_count} "
          f"(optimal={plan.stats.optimal}, "
          f"nodes={plan.stats.nodes_explored}, "
          f"time={plan.stats.solve_time:.3f}s)")
    if plan.stats.optimal and plan.move_count != optimum:
        print("MISMATCH: solver claims optimality but disagrees with "
              "the oracle", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defragsim",
        description="Flow-level simulator for GPU cluster "
                    "defragmentation and routing experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run all cells of an experiment")
    p_run.add_argument("config")
    p_run.add_argument("--algorithms",
                       help="comma-separated subset to run")
    p_run.add_argument("--seeds", type=int,
                       help="number of seeds (overrides config)")
    p_run.add_argument("--out", help="output directory (overrides config)")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one experiment axis")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True,
                         choices=("load", "oversubscription", "threshold"))
    p_sweep.add_argument("--out", help="output directory (overrides config)")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("config")
    p_val.set_defaults(fn=cmd_validate)

    p_oracle = sub.add_parser(
        "oracle", help="brute-force a solver instance file")
    p_oracle.add_argument("instance")
    p_oracle.add_argument("--time-limit", type=float, default=60.0)
    p_oracle.set_defaults(fn=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
