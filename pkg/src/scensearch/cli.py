"""Command-line entry point: run an experiment, write the results tree.

Exit codes: 0 on success, 2 for configuration problems (unknown
experiment, bad flags), 3 for backend/I-O failures during the run.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .analysis import (write_design_space_plots, write_regions_txt,
                       write_results_csv, write_trajectories, write_tree_json)
from .cart import extract_critical_regions, fit_cart
from .experiments import (Experiment, builtin_registry, combine_registries,
                          load_experiments, resolve_experiment)
from .nsga2 import Nsga2Optimizer
from .nsga2dt import Nsga2DtOptimizer
from .scenario import validate_problem
from .simulation import SimulationError

RESULTS_ROOT_ENV = "SBT_RESULTS_ROOT"
MAX_TRAJECTORY_EXPORTS = 50


def parse_time_budget(text: str) -> float:
    """'HH:MM:SS' -> seconds."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("time budget must be HH:MM:SS")
    try:
        hours, minutes, seconds = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("time budget must be HH:MM:SS") from None
    if minutes >= 60 or seconds >= 60 or hours < 0 or minutes < 0 or seconds < 0:
        raise argparse.ArgumentTypeError("time budget must be HH:MM:SS")
    return float(hours * 3600 + minutes * 60 + seconds)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scensearch",
        description="Search a scenario space for critical test cases and "
                    "characterize the critical region.")
    parser.add_argument("-e", "--experiment", help="experiment name or 1-based index")
    parser.add_argument("-n", "--population", type=int,
                        help="override population size")
    parser.add_argument("-t", "--time-budget", type=parse_time_budget,
                        help="wall-clock budget as HH:MM:SS")
    parser.add_argument("-i", "--generations", type=int,
                        help="override maximum generations")
    parser.add_argument("-s", "--seed", type=int, help="override random seed")
    parser.add_argument("-o", "--results-root",
                        default=os.environ.get(RESULTS_ROOT_ENV, "results"),
                        help="root directory for results "
                             f"(default: ${RESULTS_ROOT_ENV} or ./results)")
    parser.add_argument("--workers", type=int, help="evaluation worker threads")
    parser.add_argument("--run-id",
                        help="results subdirectory name (default: timestamp)")
    parser.add_argument("--config", action="append", default=[],
                        help="YAML experiment registry (repeatable)")
    return parser


def make_results_dir(results_root: str | Path, experiment_name: str,
                     run_id: Optional[str] = None) -> Path:
    if run_id is None:
        run_id = time.strftime("%Y%m%d-%H%M%S")
    path = Path(results_root) / experiment_name / run_id
    path.mkdir(parents=True, exist_ok=True)
    return path


def _registry_listing(registry: list[Experiment]) -> str:
    lines = ["available experiments:"]
    for i, experiment in enumerate(registry, start=1):
        lines.append(f"  {i}: {experiment.name} ({experiment.algorithm})")
    return "\n".join(lines)


def apply_overrides(experiment: Experiment, args: argparse.Namespace) -> Experiment:
    updates = {}
    if args.population is not None:
        updates["population_size"] = args.population
    if args.generations is not None:
        updates["max_generations"] = args.generations
    if args.time_budget is not None:
        updates["time_budget"] = args.time_budget
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if not updates:
        return experiment
    return replace(experiment, search_config=replace(experiment.search_config, **updates))


def write_artifacts(result, experiment: Experiment, outdir: Path) -> None:
    problem = experiment.problem
    spec = problem.spec
    write_results_csv(result.archive, spec, problem.fitness.objective_names, outdir)

    tree = fit_cart(result.archive, spec)
    write_tree_json(tree, outdir)
    regions = extract_critical_regions(tree)
    write_regions_txt(regions, spec, outdir)
    write_design_space_plots(result.archive, regions, spec, outdir)

    # re-simulate a bounded, deterministic subset of the critical cases
    subset = result.critical_set[:MAX_TRAJECTORY_EXPORTS]
    pairs = [(record,
              problem.simulator.simulate(spec, record.values,
                                         experiment.search_config.seed))
             for record in subset]
    write_trajectories(pairs, outdir / "trajectories")


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if not args.experiment:
        parser.print_usage(sys.stderr)
        print("error: -e/--experiment is required", file=sys.stderr)
        return 2

    registry = builtin_registry()
    for config_path in args.config:
        try:
            registry = combine_registries(registry, load_experiments(config_path))
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot load config {config_path}: {exc}", file=sys.stderr)
            return 2

    try:
        experiment = resolve_experiment(registry, args.experiment)
    except KeyError:
        print(f"error: unknown experiment '{args.experiment}'", file=sys.stderr)
        print(_registry_listing(registry), file=sys.stderr)
        return 2

    experiment = apply_overrides(experiment, args)
    problems = validate_problem(experiment.problem) + experiment.search_config.validate()
    problems += experiment.validate()
    if problems:
        for message in problems:
            print(f"error: {message}", file=sys.stderr)
        return 2

    try:
        outdir = make_results_dir(args.results_root, experiment.name, args.run_id)
    except OSError as exc:
        print(f"error: cannot create results directory: {exc}", file=sys.stderr)
        return 3

    def flush_archive(records):
        from .analysis import write_results_csv as flush
        flush(records, experiment.problem.spec,
              experiment.problem.fitness.objective_names, outdir)

    if experiment.algorithm == "nsga2dt":
        optimizer = Nsga2DtOptimizer(experiment.problem, experiment.search_config,
                                     experiment.dt_config, on_abort=flush_archive)
    else:
        optimizer = Nsga2Optimizer(experiment.problem, experiment.search_config,
                                   on_abort=flush_archive)

    try:
        result = optimizer.run()
        write_artifacts(result, experiment, outdir)
    except SimulationError as exc:
        print(f"error: simulation backend failed: {exc}", file=sys.stderr)
        if exc.test_input is not None:
            print(f"  offending input: {exc.test_input.tolist()}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return 3

    print(f"experiment:   {experiment.name} ({experiment.algorithm})")
    print(f"evaluations:  {result.evaluations}")
    print(f"critical:     {len(result.critical_set)}")
    print(f"pareto size:  {len(result.pareto_set)}")
    print(f"wall time:    {result.wall_time:.1f} s")
    print(f"results:      {outdir}")
    return 0


def main() -> None:
    raise SystemExit(run_cli())
