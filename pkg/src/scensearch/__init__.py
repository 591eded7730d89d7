"""Search-based scenario testing for automated driving functions."""

from .scenario import (AdasProblem, ScenarioParameter, ScenarioSpec, TestInput,
                       sample_uniform, scale_to_unit, unscale_from_unit,
                       validate_input, validate_problem, validate_spec)
from .simulation import (ActorState, AebWorldConfig, BuiltinAebSimulator,
                         SimulationError, SimulationOutput, detect_collision,
                         simulate_batch, step_world, validate_output)
from .bridge import SubprocessSimulator
from .fitness import (ContactWithSpeedCritical, DistanceSpeedFitness,
                      MinTtcFitness, min_time_to_collision, to_minimization)
from .records import EvaluationRecord
from .nsga2 import (Individual, Nsga2Optimizer, Optimizer, OptimizerResult,
                    SearchConfig, crowded_tournament_select, crowding_distance,
                    fast_non_dominated_sort, polynomial_mutation, sbx_crossover)
from .nsga2dt import DtRunResult, DtSearchConfig, Nsga2DtOptimizer
from .cart import (CartParams, DecisionTree, Region, extract_critical_regions,
                   fit_cart, fit_cart_points, format_condition,
                   merge_identical_regions)
from .experiments import (Experiment, builtin_registry, load_experiments,
                          pedestrian_crossing_problem, resolve_experiment)

__version__ = "0.1.0"
