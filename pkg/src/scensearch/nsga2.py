"""NSGA-II test generation: sorting, variation operators, search loop.

The whole search is a deterministic function of (problem, config): one
seeded random stream drives sampling, mating and mutation, and it is
consumed only on the coordinator thread, so results do not depend on the
worker count used for simulation.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fitness import to_minimization
from .records import EvaluationRecord
from .scenario import AdasProblem, sample_with_rng, validate_problem
from .simulation import SimulationError, simulate_batch


@dataclass
class SearchConfig:
    """Knobs of the generational search."""

    population_size: int = 50
    max_generations: int = 10
    time_budget: Optional[float] = None  # seconds, checked between generations
    crossover_probability: float = 0.9
    crossover_eta: float = 15.0
    mutation_probability: Optional[float] = None  # default 1/n_variables
    mutation_eta: float = 20.0
    seed: int = 1
    workers: int = 1

    def validate(self) -> list[str]:
        errors = []
        if self.population_size < 4 or self.population_size % 2 != 0:
            errors.append("population_size must be even and at least 4")
        if self.max_generations < 0:
            errors.append("max_generations must be non-negative")
        if not 0.0 <= self.crossover_probability <= 1.0:
            errors.append("crossover_probability must lie in [0, 1]")
        if self.mutation_probability is not None and not 0.0 <= self.mutation_probability <= 1.0:
            errors.append("mutation_probability must lie in [0, 1]")
        if self.crossover_eta <= 0 or self.mutation_eta <= 0:
            errors.append("distribution indices must be positive")
        if self.workers < 1:
            errors.append("workers must be >= 1")
        if self.time_budget is not None and self.time_budget < 0:
            errors.append("time_budget must be non-negative")
        return errors


@dataclass
class Individual:
    """Population member; rank and crowding are filled by sorting."""

    input: np.ndarray
    objectives: np.ndarray          # minimization view
    raw_objectives: tuple[float, ...]
    critical: bool
    record_index: int
    rank: int = -1
    crowding: float = 0.0


@dataclass
class OptimizerResult:
    """Everything a search run produced."""

    archive: list[EvaluationRecord]
    final_population: list[Individual]
    pareto_set: list[EvaluationRecord]
    critical_set: list[EvaluationRecord]
    iterations_run: int
    wall_time: float
    evaluations: int


def fast_non_dominated_sort(objectives: np.ndarray) -> list[list[int]]:
    """Split points into fronts of mutual non-domination (minimization).

    Returns index lists; front 0 is the non-dominated set, later fronts
    become non-dominated once earlier ones are removed.
    """
    F = np.asarray(objectives, dtype=float)
    if F.size == 0:
        return []
    n = F.shape[0]
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dominates = le & lt  # dominates[i, j]: i dominates j
    dominated_by = dominates.sum(axis=0)

    fronts = []
    assigned = np.zeros(n, dtype=bool)
    current = np.nonzero(dominated_by == 0)[0]
    while current.size:
        fronts.append([int(i) for i in current])
        assigned[current] = True
        dominated_by = dominated_by - dominates[current].sum(axis=0)
        current = np.nonzero((dominated_by == 0) & ~assigned)[0]
    return fronts


def crowding_distance(front_objectives: np.ndarray) -> np.ndarray:
    """Diversity measure within one front; boundaries get infinity."""
    F = np.asarray(front_objectives, dtype=float)
    n = F.shape[0]
    if n == 0:
        return np.empty(0)
    if n <= 2:
        return np.full(n, np.inf)
    d = np.zeros(n)
    for j in range(F.shape[1]):
        order = np.argsort(F[:, j], kind="stable")
        fmin = F[order[0], j]
        fmax = F[order[-1], j]
        d[order[0]] = np.inf
        d[order[-1]] = np.inf
        if fmax == fmin:
            continue
        gaps = (F[order[2:], j] - F[order[:-2], j]) / (fmax - fmin)
        d[order[1:-1]] += gaps
    return d


def crowded_tournament_select(rank: np.ndarray, crowding: np.ndarray,
                              rng: np.random.Generator) -> int:
    """Binary tournament: lower rank, then larger crowding, then coin flip."""
    n = len(rank)
    a = int(rng.integers(0, n))
    b = int(rng.integers(0, n))
    if rank[a] < rank[b]:
        return a
    if rank[b] < rank[a]:
        return b
    if crowding[a] > crowding[b]:
        return a
    if crowding[b] > crowding[a]:
        return b
    return a if rng.random() < 0.5 else b


def sbx_crossover(p1: np.ndarray, p2: np.ndarray, eta: float, probability: float,
                  lower: np.ndarray, upper: np.ndarray,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover with symmetric spread, clamped to bounds.

    Applied to the pair with ``probability``, then per variable with
    probability 0.5.  On variables that are not clipped the children sum
    to the parents' sum.
    """
    c1 = p1.copy()
    c2 = p2.copy()
    if rng.random() > probability:
        return c1, c2
    for i in range(len(p1)):
        if rng.random() > 0.5:
            continue
        u = rng.random()
        if u <= 0.5:
            beta = (2.0 * u) ** (1.0 / (eta + 1.0))
        else:
            beta = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))
        a, b = p1[i], p2[i]
        c1[i] = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b)
        c2[i] = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b)
    np.clip(c1, lower, upper, out=c1)
    np.clip(c2, lower, upper, out=c2)
    return c1, c2


def polynomial_mutation(x: np.ndarray, eta: float, probability: float,
                        lower: np.ndarray, upper: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    """Bounded polynomial mutation, applied per variable."""
    y = x.copy()
    for i in range(len(x)):
        if rng.random() > probability:
            continue
        lo, hi = lower[i], upper[i]
        span = hi - lo
        if span <= 0:
            continue
        u = rng.random()
        exponent = 1.0 / (eta + 1.0)
        if u < 0.5:
            rel = (y[i] - lo) / span
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - rel) ** (eta + 1.0)
            delta = val ** exponent - 1.0
        else:
            rel = (hi - y[i]) / span
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - rel) ** (eta + 1.0)
            delta = 1.0 - val ** exponent
        y[i] = min(max(y[i] + delta * span, lo), hi)
    return y


class Evaluator:
    """Runs simulations, applies fitness, and grows the shared archive."""

    def __init__(self, problem: AdasProblem, workers: int = 1, seed: int = 0):
        self.problem = problem
        self.workers = workers
        self.seed = seed
        self.archive: list[EvaluationRecord] = []
        self.directions = problem.directions()

    @property
    def count(self) -> int:
        return len(self.archive)

    def evaluate(self, inputs: list[np.ndarray]) -> list[Individual]:
        outputs = simulate_batch(self.problem.simulator, self.problem.spec,
                                 inputs, seed=self.seed, workers=self.workers)
        individuals = []
        for x, out in zip(inputs, outputs):
            if isinstance(out, Exception):
                raise out
            raw = tuple(float(v) for v in self.problem.fitness.eval(out))
            internal = to_minimization(raw, self.directions)
            critical = bool(self.problem.criticality(raw, out))
            record = EvaluationRecord(
                index=len(self.archive), values=np.asarray(x, dtype=float),
                objectives=raw, critical=critical, metadata=dict(out.metadata))
            self.archive.append(record)
            individuals.append(Individual(
                input=record.values, objectives=internal,
                raw_objectives=raw, critical=critical,
                record_index=record.index))
        return individuals


def assign_rank_and_crowding(population: list[Individual]) -> list[list[int]]:
    F = np.array([ind.objectives for ind in population])
    fronts = fast_non_dominated_sort(F)
    for front_no, front in enumerate(fronts):
        dist = crowding_distance(F[front])
        for i, idx in enumerate(front):
            population[idx].rank = front_no
            population[idx].crowding = float(dist[i])
    return fronts


def environmental_selection(population: list[Individual], n: int) -> list[Individual]:
    """Keep the best n by (front, crowding); truncate the split front."""
    fronts = assign_rank_and_crowding(population)
    survivors: list[Individual] = []
    for front in fronts:
        if len(survivors) + len(front) <= n:
            survivors.extend(population[i] for i in front)
        else:
            dist = np.array([population[i].crowding for i in front])
            order = np.argsort(-dist, kind="stable")
            survivors.extend(population[front[i]] for i in order[: n - len(survivors)])
            break
    return survivors


def pareto_subset(records: list[EvaluationRecord], directions) -> list[EvaluationRecord]:
    """Non-dominated subset of an archive, in archive order."""
    if not records:
        return []
    F = to_minimization([r.objectives for r in records], directions)
    fronts = fast_non_dominated_sort(F)
    return [records[i] for i in fronts[0]] if fronts else []


class Nsga2Engine:
    """Stateful generational loop, restrictable to a sub-box of the space.

    Used directly by the plain NSGA-II optimizer and re-driven per region
    by the tree-guided loop.  ``seed_individuals`` re-enter the population
    without re-simulation.
    """

    def __init__(self, problem: AdasProblem, config: SearchConfig,
                 evaluator: Evaluator, rng: np.random.Generator,
                 lower: Optional[np.ndarray] = None,
                 upper: Optional[np.ndarray] = None):
        self.problem = problem
        self.config = config
        self.evaluator = evaluator
        self.rng = rng
        self.lower = problem.spec.lower if lower is None else np.asarray(lower, float)
        self.upper = problem.spec.upper if upper is None else np.asarray(upper, float)
        self.population: list[Individual] = []

    def initialize(self, seed_individuals: Optional[list[Individual]] = None) -> None:
        n = self.config.population_size
        seeds = list(seed_individuals or [])[:n]
        fresh_count = n - len(seeds)
        fresh: list[Individual] = []
        if fresh_count > 0:
            inputs = sample_with_rng(self.lower, self.upper, fresh_count, self.rng)
            fresh = self.evaluator.evaluate(inputs)
        self.population = seeds + fresh

    def step_generation(self) -> None:
        cfg = self.config
        n = cfg.population_size
        mut_prob = cfg.mutation_probability
        if mut_prob is None:
            mut_prob = 1.0 / len(self.lower)
        assign_rank_and_crowding(self.population)
        rank = np.array([ind.rank for ind in self.population])
        crowd = np.array([ind.crowding for ind in self.population])
        offspring_inputs: list[np.ndarray] = []
        while len(offspring_inputs) < n:
            i = crowded_tournament_select(rank, crowd, self.rng)
            j = crowded_tournament_select(rank, crowd, self.rng)
            c1, c2 = sbx_crossover(self.population[i].input, self.population[j].input,
                                   cfg.crossover_eta, cfg.crossover_probability,
                                   self.lower, self.upper, self.rng)
            for child in (c1, c2):
                child = polynomial_mutation(child, cfg.mutation_eta, mut_prob,
                                            self.lower, self.upper, self.rng)
                if len(offspring_inputs) < n:
                    offspring_inputs.append(child)
        offspring = self.evaluator.evaluate(offspring_inputs)
        self.population = environmental_selection(self.population + offspring, n)


class Optimizer:
    """Search contract: construct with (problem, config), then run()."""

    def __init__(self, problem: AdasProblem, config: SearchConfig,
                 on_abort: Optional[Callable[[list[EvaluationRecord]], None]] = None):
        problems = validate_problem(problem) + config.validate()
        if problems:
            raise ValueError("invalid search setup: " + "; ".join(problems))
        self.problem = problem
        self.config = config
        self.on_abort = on_abort

    def run(self) -> OptimizerResult:
        raise NotImplementedError

    def _result(self, evaluator: Evaluator, population: list[Individual],
                iterations: int, started: float) -> OptimizerResult:
        directions = self.problem.directions()
        archive = evaluator.archive
        return OptimizerResult(
            archive=archive,
            final_population=population,
            pareto_set=pareto_subset(archive, directions),
            critical_set=[r for r in archive if r.critical],
            iterations_run=iterations,
            wall_time=time.perf_counter() - started,
            evaluations=len(archive),
        )


class Nsga2Optimizer(Optimizer):
    """Plain NSGA-II over the full search box."""

    def run(self) -> OptimizerResult:
        started = time.perf_counter()
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        evaluator = Evaluator(self.problem, workers=cfg.workers, seed=cfg.seed)
        engine = Nsga2Engine(self.problem, cfg, evaluator, rng)
        generations = 0
        try:
            engine.initialize()
            while generations < cfg.max_generations:
                if cfg.time_budget is not None and \
                        time.perf_counter() - started >= cfg.time_budget:
                    break
                engine.step_generation()
                generations += 1
        except SimulationError:
            if self.on_abort is not None:
                self.on_abort(evaluator.archive)
            raise
        return self._result(evaluator, engine.population, generations, started)
