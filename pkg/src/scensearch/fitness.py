"""Fitness evaluation and the criticality verdict.

All evaluators are pure functions of a SimulationOutput.  Raw objective
values keep their user-facing orientation (distances in meters, speeds in
m/s); :func:`to_minimization` converts them once at the search boundary.
"""
from __future__ import annotations

import numpy as np

from .simulation import SimulationOutput


class FitnessError(ValueError):
    """Raised when an output cannot be evaluated (e.g. missing actor)."""


def _actor(output: SimulationOutput, name: str) -> np.ndarray:
    try:
        return output.actors[name]
    except KeyError:
        raise FitnessError(f"output has no actor '{name}'") from None


class DistanceSpeedFitness:
    """Two objectives: minimal separation, and ego speed when it occurs.

    The separation subtracts the combined collision radius so that contact
    evaluates to exactly 0.0, which keeps the criticality predicate exact
    on floating point.  Both values come from one pass over the
    trajectories; ties on the minimum go to the earliest step.
    """

    objective_names = ("min_distance", "speed_at_min_distance")
    directions = ("min", "max")

    def __init__(self, collision_radius: float = 1.0):
        self.collision_radius = collision_radius

    def eval(self, output: SimulationOutput) -> tuple[float, float]:
        ego = _actor(output, "ego")
        ped = _actor(output, "pedestrian")
        d = np.sqrt((ego[:, 1] - ped[:, 1]) ** 2 + (ego[:, 2] - ped[:, 2]) ** 2)
        k = int(np.argmin(d))
        f1 = max(0.0, float(d[k]) - self.collision_radius)
        f2 = float(ego[k, 4])
        return f1, f2


# Sentinel for "never closing": finite so that sorting stays total.
TTC_SENTINEL = 1e9


def min_time_to_collision(output: SimulationOutput,
                          collision_radius: float = 1.0) -> float:
    """Smallest time-to-collision over the run.

    Per step, TTC is the radius-adjusted separation divided by the closing
    speed, where the closing speed is the forward difference of the
    separation; steps that are not closing are skipped.  Returns the
    sentinel when the actors never close in.
    """
    ego = _actor(output, "ego")
    ped = _actor(output, "pedestrian")
    d = np.sqrt((ego[:, 1] - ped[:, 1]) ** 2 + (ego[:, 2] - ped[:, 2]) ** 2)
    if len(d) < 2:
        return TTC_SENTINEL
    closing = (d[:-1] - d[1:]) / output.dt
    gap = np.maximum(d[:-1] - collision_radius, 0.0)
    mask = closing > 0.0
    if not np.any(mask):
        return TTC_SENTINEL
    return float(np.min(gap[mask] / closing[mask]))


class MinTtcFitness:
    """Single objective: minimal time-to-collision (to be minimized)."""

    objective_names = ("min_ttc",)
    directions = ("min",)

    def __init__(self, collision_radius: float = 1.0):
        self.collision_radius = collision_radius

    def eval(self, output: SimulationOutput) -> tuple[float]:
        return (min_time_to_collision(output, self.collision_radius),)


class ContactWithSpeedCritical:
    """A test case is critical when contact happens while the ego moves.

    Expects objectives from :class:`DistanceSpeedFitness`: separation
    exactly 0 and strictly positive ego speed at that moment.
    """

    def __call__(self, objectives, output: SimulationOutput) -> bool:
        f1, f2 = float(objectives[0]), float(objectives[1])
        return f1 == 0.0 and f2 > 0.0


def to_minimization(objectives, directions) -> np.ndarray:
    """Flip maximize-objectives so the search can minimize everything."""
    values = np.asarray(objectives, dtype=float)
    if values.shape[-1] != len(directions):
        raise ValueError(f"{values.shape[-1]} objectives but {len(directions)} directions")
    signs = np.array([-1.0 if d == "max" else 1.0 for d in directions])
    return values * signs
