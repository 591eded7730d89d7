"""Parameterized scenarios, search spaces, and the test-generation problem.

A scenario is described by a set of named real-valued parameters with
closed bounds.  A concrete test input is a plain 1-D float vector whose
entries follow the declaration order of the parameters; that single
ordering is used everywhere (CSV columns, decision-tree features,
variation operators).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# A test input is a 1-D float vector aligned with ScenarioSpec.parameters.
TestInput = np.ndarray


@dataclass(frozen=True)
class ScenarioParameter:
    """One search variable: name, closed bounds and a unit label."""

    name: str
    lower: float
    upper: float
    unit: str = ""


@dataclass(frozen=True)
class ScenarioSpec:
    """A parameterized scenario: where it lives and what varies in it.

    ``scenario_path`` is either a file path or a logical id of the form
    ``builtin:<name>``.  ``fixed_settings`` holds scenario constants that
    are not searched; the built-in simulator accepts world-config field
    names here as overrides.
    """

    scenario_path: str
    parameters: tuple[ScenarioParameter, ...]
    fixed_settings: dict[str, float] = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lower for p in self.parameters], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.upper for p in self.parameters], dtype=float)

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))


@dataclass(frozen=True)
class AdasProblem:
    """Everything the search needs: scenario, simulator, fitness, criticality.

    ``fitness`` must expose ``objective_names``, ``directions`` and
    ``eval(output) -> tuple``; ``criticality`` is a callable
    ``(objectives, output) -> bool``; ``simulator`` exposes
    ``simulate(spec, input, seed) -> SimulationOutput``.
    """

    spec: ScenarioSpec
    fitness: object
    criticality: object
    simulator: object
    problem_name: str = "problem"
    objective_directions: tuple[str, ...] = ()

    def directions(self) -> tuple[str, ...]:
        if self.objective_directions:
            return tuple(self.objective_directions)
        return tuple(self.fitness.directions)


def validate_spec(spec: ScenarioSpec) -> list[str]:
    """Return a list of human-readable problems with the spec (empty if ok)."""
    errors = []
    seen = set()
    for i, p in enumerate(spec.parameters):
        if not p.name:
            errors.append(f"parameter {i}: empty name")
        if p.name in seen:
            errors.append(f"parameter {i}: duplicate name '{p.name}'")
        seen.add(p.name)
        if not p.lower < p.upper:
            errors.append(f"parameter '{p.name}': degenerate bound [{p.lower}, {p.upper}]")
    if not spec.parameters:
        errors.append("scenario has no search parameters")
    overlap = seen & set(spec.fixed_settings)
    if overlap:
        errors.append(f"fixed_settings shadow search parameters: {sorted(overlap)}")
    return errors


def validate_input(spec: ScenarioSpec, values: Sequence[float]) -> list[str]:
    """Check a test input against the spec's bounds."""
    errors = []
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) != len(spec.parameters):
        return [f"expected {len(spec.parameters)} values, got shape {values.shape}"]
    for i, p in enumerate(spec.parameters):
        if values[i] < p.lower:
            errors.append(f"value below lower bound (index {i})")
        elif values[i] > p.upper:
            errors.append(f"value above upper bound (index {i})")
    return errors


def validate_problem(problem: AdasProblem) -> list[str]:
    """Validate the full problem definition; empty result means runnable."""
    errors = validate_spec(problem.spec)
    path = problem.spec.scenario_path
    if path and not path.startswith("builtin:") and not os.path.exists(path):
        errors.append(f"scenario file not found: {path}")
    n_obj = len(problem.fitness.objective_names)
    if len(problem.fitness.directions) != n_obj:
        errors.append("fitness direction count does not match objective count")
    if problem.objective_directions and len(problem.objective_directions) != n_obj:
        errors.append("objective_directions length does not match objective count")
    for d in problem.directions():
        if d not in ("min", "max"):
            errors.append(f"unknown objective direction '{d}'")
    return errors


def sample_uniform(spec: ScenarioSpec, count: int, seed: int) -> list[TestInput]:
    """Deterministic uniform sample of ``count`` inputs within bounds."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return sample_with_rng(spec.lower, spec.upper, count, rng)


def sample_with_rng(lower: np.ndarray, upper: np.ndarray, count: int,
                    rng: np.random.Generator) -> list[TestInput]:
    u = rng.random((count, len(lower)))
    x = lower + u * (upper - lower)
    return [x[i].copy() for i in range(count)]


def scale_to_unit(spec: ScenarioSpec, values: Sequence[float]) -> np.ndarray:
    """Map a test input onto the unit cube (lower -> 0, upper -> 1)."""
    values = np.asarray(values, dtype=float)
    return (values - spec.lower) / (spec.upper - spec.lower)


def unscale_from_unit(spec: ScenarioSpec, unit: Sequence[float]) -> TestInput:
    """Inverse of :func:`scale_to_unit`."""
    unit = np.asarray(unit, dtype=float)
    return spec.lower + unit * (spec.upper - spec.lower)
