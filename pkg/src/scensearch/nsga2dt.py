"""Tree-guided search: alternate NSGA-II bursts with region restriction.

Each outer iteration runs the generational search inside every active
region, fits a criticality tree on the whole archive, and replaces the
active regions with the critical boxes the tree found (falling back to
the full search box when there are none).  Every reported critical input
comes from the archive, i.e. was actually simulated.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cart import (CartParams, DecisionTree, Region, extract_critical_regions,
                   fit_cart, merge_identical_regions)
from .nsga2 import (Evaluator, Individual, Nsga2Engine, Optimizer,
                    OptimizerResult, SearchConfig)
from .simulation import SimulationError


@dataclass
class DtSearchConfig:
    """Knobs of the outer region-restriction loop.

    Per iteration the inner budget is ``inner_generations * population``
    evaluations, split evenly across active regions; the whole run stops
    at ``max_evaluations`` (checked at generation boundaries) or after
    ``max_iterations`` outer rounds.
    """

    inner_generations: int = 5
    max_evaluations: int = 2000
    max_iterations: Optional[int] = None
    critical_fraction: float = 0.5
    min_leaf_samples: int = 10
    seed_from_archive: bool = True
    cart: CartParams = field(default_factory=CartParams)

    def validate(self) -> list[str]:
        errors = []
        if self.inner_generations < 1:
            errors.append("inner_generations must be >= 1")
        if self.max_evaluations < 1:
            errors.append("max_evaluations must be >= 1")
        if not 0.0 < self.critical_fraction <= 1.0:
            errors.append("critical_fraction must lie in (0, 1]")
        if self.min_leaf_samples < 1:
            errors.append("min_leaf_samples must be >= 1")
        return errors


@dataclass
class DtRunResult(OptimizerResult):
    """Search result plus the per-iteration trees and active regions."""

    trees: list[DecisionTree] = field(default_factory=list)
    region_history: list[list[Region]] = field(default_factory=list)


class Nsga2DtOptimizer(Optimizer):
    """NSGA-II alternated with decision-tree region restriction."""

    def __init__(self, problem, config: SearchConfig, dt_config: DtSearchConfig,
                 on_abort=None):
        super().__init__(problem, config, on_abort=on_abort)
        problems = dt_config.validate()
        if problems:
            raise ValueError("invalid tree-guided setup: " + "; ".join(problems))
        self.dt_config = dt_config

    def _full_box(self) -> Region:
        spec = self.problem.spec
        return Region(lower=spec.lower, upper=spec.upper, support=0, purity=0.0)

    def _seeds_in_region(self, evaluator: Evaluator, region: Region,
                         directions) -> list[Individual]:
        from .fitness import to_minimization

        seeds = []
        for record in evaluator.archive:
            if region.contains(record.values):
                seeds.append(Individual(
                    input=record.values,
                    objectives=to_minimization(record.objectives, directions),
                    raw_objectives=record.objectives,
                    critical=record.critical,
                    record_index=record.index))
        # newest archive entries first: they reflect the current focus
        seeds.reverse()
        return seeds[: self.config.population_size]

    def run(self) -> DtRunResult:
        started = time.perf_counter()
        cfg = self.config
        dt_cfg = self.dt_config
        rng = np.random.default_rng(cfg.seed)
        evaluator = Evaluator(self.problem, workers=cfg.workers, seed=cfg.seed)
        directions = self.problem.directions()

        trees: list[DecisionTree] = []
        region_history: list[list[Region]] = []
        regions: list[Region] = [self._full_box()]
        population: list[Individual] = []
        iteration = 0

        def out_of_budget() -> bool:
            if evaluator.count >= dt_cfg.max_evaluations:
                return True
            if cfg.time_budget is not None and \
                    time.perf_counter() - started >= cfg.time_budget:
                return True
            return False

        try:
            while not out_of_budget():
                if dt_cfg.max_iterations is not None and iteration >= dt_cfg.max_iterations:
                    break
                # evaluation share per region, at generation granularity
                share = dt_cfg.inner_generations * cfg.population_size / len(regions)
                gens_per_region = max(1, round(share / cfg.population_size))
                for region in regions:
                    if out_of_budget():
                        break
                    engine = Nsga2Engine(self.problem, cfg, evaluator, rng,
                                         lower=region.lower, upper=region.upper)
                    seeds = (self._seeds_in_region(evaluator, region, directions)
                             if dt_cfg.seed_from_archive else [])
                    engine.initialize(seed_individuals=seeds)
                    population = engine.population
                    for _ in range(gens_per_region):
                        if out_of_budget():
                            break
                        engine.step_generation()
                        population = engine.population
                tree = fit_cart(evaluator.archive, self.problem.spec, dt_cfg.cart)
                trees.append(tree)
                critical_boxes = merge_identical_regions(extract_critical_regions(
                    tree, min_support=dt_cfg.min_leaf_samples,
                    min_fraction=dt_cfg.critical_fraction))
                regions = critical_boxes if critical_boxes else [self._full_box()]
                region_history.append(regions)
                iteration += 1
        except SimulationError:
            if self.on_abort is not None:
                self.on_abort(evaluator.archive)
            raise

        base = self._result(evaluator, population, iteration, started)
        return DtRunResult(
            archive=base.archive, final_population=base.final_population,
            pareto_set=base.pareto_set, critical_set=base.critical_set,
            iterations_run=base.iterations_run, wall_time=base.wall_time,
            evaluations=base.evaluations, trees=trees,
            region_history=region_history)
