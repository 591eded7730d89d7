"""Experiment definitions: the built-in registry and the YAML config format.

An experiment bundles a problem, an algorithm choice and a search
configuration under a name, so the command line can address it with
``-e <name>`` or ``-e <1-based index>``.
"""
from __future__ import annotations

import shlex
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import yaml

from .bridge import SubprocessSimulator
from .fitness import ContactWithSpeedCritical, DistanceSpeedFitness, MinTtcFitness
from .nsga2 import SearchConfig
from .nsga2dt import DtSearchConfig
from .cart import CartParams
from .scenario import AdasProblem, ScenarioParameter, ScenarioSpec
from .simulation import BuiltinAebSimulator

ALGORITHMS = ("nsga2", "nsga2dt")

FITNESS_REGISTRY = {
    "distance_speed": DistanceSpeedFitness,
    "min_ttc": MinTtcFitness,
}

CRITICALITY_REGISTRY = {
    "contact_with_speed": ContactWithSpeedCritical,
}


@dataclass
class Experiment:
    name: str
    problem: AdasProblem
    algorithm: str
    search_config: SearchConfig
    dt_config: Optional[DtSearchConfig] = None

    def validate(self) -> list[str]:
        errors = []
        if self.algorithm not in ALGORITHMS:
            errors.append(f"unknown algorithm '{self.algorithm}'")
        if self.algorithm == "nsga2dt" and self.dt_config is None:
            errors.append("nsga2dt experiments need a dt_search section")
        if self.algorithm == "nsga2" and self.dt_config is not None:
            errors.append("dt_search section given but algorithm is nsga2")
        return errors


def pedestrian_crossing_problem(fixed_settings: Optional[dict] = None) -> AdasProblem:
    """The built-in occluded-pedestrian scenario with its standard bounds."""
    fixed = dict(fixed_settings or {})
    spec = ScenarioSpec(
        scenario_path="builtin:pedestrian-crossing",
        parameters=(
            ScenarioParameter("PedSpeed", 0.5, 3.0, "m/s"),
            ScenarioParameter("EgoSpeed", 1.0, 22.0, "m/s"),
            ScenarioParameter("PedDist", 0.0, 60.0, "m"),
        ),
        fixed_settings=fixed,
    )
    simulator = BuiltinAebSimulator()
    radius = simulator.config_for(spec).collision_radius
    return AdasProblem(
        spec=spec,
        fitness=DistanceSpeedFitness(collision_radius=radius),
        criticality=ContactWithSpeedCritical(),
        simulator=simulator,
        problem_name="pedestrian-crossing",
    )


def builtin_registry() -> list[Experiment]:
    return [
        Experiment(
            name="pedestrian_crossing",
            problem=pedestrian_crossing_problem(),
            algorithm="nsga2",
            search_config=SearchConfig(population_size=50, max_generations=20,
                                       seed=1),
        ),
        Experiment(
            name="pedestrian_crossing_dt",
            problem=pedestrian_crossing_problem(),
            algorithm="nsga2dt",
            search_config=SearchConfig(population_size=50, max_generations=20,
                                       seed=1),
            dt_config=DtSearchConfig(inner_generations=5, max_evaluations=2000),
        ),
    ]


def _build_simulator(value: str):
    if value == "builtin":
        return BuiltinAebSimulator()
    if value.startswith("subprocess:"):
        command = shlex.split(value[len("subprocess:"):])
        return SubprocessSimulator(command)
    raise ValueError(f"unknown simulator '{value}' (use builtin or subprocess:<command>)")


def _build_search_config(section: Optional[dict]) -> SearchConfig:
    return replace(SearchConfig(), **(section or {}))


def _build_dt_config(section: Optional[dict]) -> Optional[DtSearchConfig]:
    if section is None:
        return None
    section = dict(section)
    cart = section.pop("cart", None)
    cfg = replace(DtSearchConfig(), **section)
    if cart is not None:
        cfg.cart = CartParams(**cart)
    return cfg


def experiment_from_dict(entry: dict) -> Experiment:
    """Build one experiment from a parsed config mapping."""
    name = str(entry["name"])
    variables = entry.get("variables", [])
    parameters = tuple(
        ScenarioParameter(str(v["name"]), float(v["lower"]), float(v["upper"]),
                          str(v.get("unit", "")))
        for v in variables
    )
    fixed = {str(k): v for k, v in (entry.get("fixed") or {}).items()}
    spec = ScenarioSpec(scenario_path=str(entry.get("scenario", "")),
                        parameters=parameters, fixed_settings=fixed)

    simulator = _build_simulator(str(entry.get("simulator", "builtin")))
    fitness_name = str(entry.get("fitness", "distance_speed"))
    criticality_name = str(entry.get("criticality", "contact_with_speed"))
    if fitness_name not in FITNESS_REGISTRY:
        raise ValueError(f"unknown fitness '{fitness_name}'")
    if criticality_name not in CRITICALITY_REGISTRY:
        raise ValueError(f"unknown criticality '{criticality_name}'")

    fitness_options = dict(entry.get("fitness_options") or {})
    if "collision_radius" not in fitness_options and isinstance(simulator, BuiltinAebSimulator):
        fitness_options["collision_radius"] = simulator.config_for(spec).collision_radius
    fitness = FITNESS_REGISTRY[fitness_name](**fitness_options)
    criticality = CRITICALITY_REGISTRY[criticality_name]()

    problem = AdasProblem(
        spec=spec, fitness=fitness, criticality=criticality,
        simulator=simulator, problem_name=name)
    experiment = Experiment(
        name=name,
        problem=problem,
        algorithm=str(entry.get("algorithm", "nsga2")),
        search_config=_build_search_config(entry.get("search")),
        dt_config=_build_dt_config(entry.get("dt_search")),
    )
    errors = experiment.validate()
    if errors:
        raise ValueError(f"experiment '{name}': " + "; ".join(errors))
    return experiment


def load_experiments(path: str | Path) -> list[Experiment]:
    """Load a YAML registry file (top-level ``experiments`` list)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    entries = doc.get("experiments", [])
    if not isinstance(entries, list):
        raise ValueError("config must contain an 'experiments' list")
    return [experiment_from_dict(entry) for entry in entries]


def combine_registries(*registries: list[Experiment]) -> list[Experiment]:
    """Concatenate registries, enforcing unique experiment names."""
    combined: list[Experiment] = []
    seen: set[str] = set()
    for registry in registries:
        for experiment in registry:
            if experiment.name in seen:
                raise ValueError(f"duplicate experiment name '{experiment.name}'")
            seen.add(experiment.name)
            combined.append(experiment)
    return combined


def resolve_experiment(registry: list[Experiment], key: str) -> Experiment:
    """Find an experiment by name, or by 1-based registry index."""
    for experiment in registry:
        if experiment.name == key:
            return experiment
    try:
        index = int(key)
    except ValueError:
        raise KeyError(key) from None
    if 1 <= index <= len(registry):
        return registry[index - 1]
    raise KeyError(key)
