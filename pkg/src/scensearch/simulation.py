"""Scenario execution: output schema, the built-in AEB world, batch runs.

The built-in backend models an ego vehicle driving along +x on a straight
road while an initially occluded pedestrian crosses its path.  Dynamics
are an explicit Euler integration with a fixed step; the result is a pure
function of (scenario spec, test input), so repeated and concurrent runs
are bit-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .pool import EvaluationJob, evaluate_pool
from .scenario import ScenarioSpec, TestInput

# Column layout of every actor trajectory array.
STATE_COLUMNS = ("t", "x", "y", "yaw", "speed")


class SimulationError(RuntimeError):
    """A backend failed to produce a valid output for one test input."""

    def __init__(self, message: str, test_input=None, details: str = ""):
        super().__init__(message)
        self.test_input = None if test_input is None else np.asarray(test_input, dtype=float)
        self.details = details


@dataclass(frozen=True)
class ActorState:
    """Single time-stamped actor state."""

    t: float
    x: float
    y: float
    yaw: float
    speed: float


@dataclass
class SimulationOutput:
    """Trajectories of all actors on a shared time grid, plus verdicts.

    ``actors`` maps an actor name to a float array of shape (K, 5) with
    columns ``t, x, y, yaw, speed``; all actors share the same K and the
    time column is ``k * dt``.
    """

    dt: float
    actors: dict[str, np.ndarray]
    collision: bool
    collision_time: Optional[float]
    metadata: dict[str, str] = field(default_factory=dict)

    def actor_states(self, name: str) -> list[ActorState]:
        return [ActorState(*row) for row in self.actors[name]]

    def to_json_dict(self, msg_id: int = 0) -> dict:
        return {
            "id": msg_id,
            "dt": self.dt,
            "actors": {name: traj.tolist() for name, traj in self.actors.items()},
            "collision": self.collision,
            "collision_time": self.collision_time,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SimulationOutput":
        actors = {name: np.asarray(rows, dtype=float).reshape(-1, 5)
                  for name, rows in obj["actors"].items()}
        out = cls(
            dt=float(obj["dt"]),
            actors=actors,
            collision=bool(obj["collision"]),
            collision_time=None if obj.get("collision_time") is None
            else float(obj["collision_time"]),
            metadata={str(k): str(v) for k, v in obj.get("metadata", {}).items()},
        )
        return out


def validate_output(out: SimulationOutput) -> list[str]:
    """Check the SimulationOutput invariants; empty list means valid."""
    errors = []
    if out.dt <= 0:
        errors.append(f"non-positive dt: {out.dt}")
    lengths = {name: len(traj) for name, traj in out.actors.items()}
    if not lengths:
        errors.append("no actors")
        return errors
    if len(set(lengths.values())) > 1:
        errors.append(f"inconsistent trajectory lengths: {lengths}")
        return errors
    k = next(iter(lengths.values()))
    if k == 0:
        errors.append("empty trajectories")
        return errors
    grid = np.arange(k) * out.dt
    for name, traj in out.actors.items():
        if traj.ndim != 2 or traj.shape[1] != 5:
            errors.append(f"actor '{name}': expected (K, 5) array, got {traj.shape}")
            return errors
        if not np.array_equal(traj[:, 0], grid):
            errors.append(f"actor '{name}': timestamps are not k*dt")
        if np.any(traj[:, 4] < 0):
            errors.append(f"actor '{name}': negative speed")
    last_t = grid[-1]
    if out.collision:
        if out.collision_time is None:
            errors.append("collision flagged but collision_time missing")
        elif not 0.0 <= out.collision_time <= last_t:
            errors.append(f"collision_time {out.collision_time} outside [0, {last_t}]")
    elif out.collision_time is not None:
        errors.append("collision_time present without collision")
    return errors


def detect_collision(ego_xy: np.ndarray, ped_xy: np.ndarray, radius: float,
                     dt: float) -> Optional[float]:
    """First time with euclidean distance strictly below ``radius``."""
    d = np.sqrt(np.sum((ego_xy - ped_xy) ** 2, axis=1))
    hits = np.nonzero(d < radius)[0]
    if len(hits) == 0:
        return None
    return float(hits[0] * dt)


@dataclass(frozen=True)
class AebWorldConfig:
    """Geometry, detection and controller constants of the built-in world.

    The pedestrian is occluded until it has walked ``occlusion_reveal_dist``
    meters; the emergency brake (full ``max_decel``) engages
    ``reaction_delay`` seconds after the pedestrian is first revealed,
    within ``detection_range``, ahead of the ego, and the longitudinal
    time-to-collision drops to ``ttc_brake_threshold``.
    """

    dt: float = 0.01
    horizon: float = 12.0
    ego_start: tuple[float, float] = (0.0, 0.0)
    ped_pos: tuple[float, float] = (80.0, 4.0)
    ped_cross_direction: tuple[float, float] = (0.0, -1.0)
    ped_stop_after: float = 8.0
    detection_range: float = 50.0
    occlusion_reveal_dist: float = 0.2
    ttc_brake_threshold: float = 1.8
    reaction_delay: float = 0.1
    max_decel: float = 8.0
    collision_radius: float = 1.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon < 1.0:
            raise ValueError("horizon must be at least 1 s")
        if self.max_decel <= 0:
            raise ValueError("max_decel must be positive")
        if self.collision_radius <= 0:
            raise ValueError("collision_radius must be positive")


@dataclass(slots=True)
class WorldState:
    """Mutable per-run state of the built-in world."""

    ego_x: float
    ego_y: float
    ego_v: float
    ped_speed: float
    ped_dist: float
    walked: float = 0.0
    triggered: bool = False
    revealed: bool = False
    brake_cond_step: int = -1
    braking: bool = False
    step: int = 0
    delay_steps: int = 0


def _ped_xy(cfg: AebWorldConfig, walked: float) -> tuple[float, float]:
    return (cfg.ped_pos[0] + cfg.ped_cross_direction[0] * walked,
            cfg.ped_pos[1] + cfg.ped_cross_direction[1] * walked)


def step_world(state: WorldState, cfg: AebWorldConfig,
               dist: Optional[float] = None) -> WorldState:
    """Advance the world by one Euler step (in place).

    Positions advance with the current speed, then the ego speed is
    reduced while the brake is engaged (clamped at zero).  ``dist`` may
    pass in the current ego-pedestrian distance to avoid recomputing it.
    """
    px, py = _ped_xy(cfg, state.walked)
    if dist is None:
        dx = px - state.ego_x
        dy = py - state.ego_y
        dist = math.sqrt(dx * dx + dy * dy)

    # pedestrian trigger: latches when the ego comes within ped_dist
    if not state.triggered and dist <= state.ped_dist:
        state.triggered = True
    # occlusion/range gate: latches once the pedestrian becomes detectable
    if state.triggered and not state.revealed:
        if state.walked >= cfg.occlusion_reveal_dist and dist <= cfg.detection_range:
            state.revealed = True
    # brake decision: first instant the TTC criterion holds while revealed
    if state.revealed and state.brake_cond_step < 0:
        gap = px - state.ego_x
        if gap > 0.0 and gap / max(state.ego_v, 0.1) <= cfg.ttc_brake_threshold:
            state.brake_cond_step = state.step
    if (not state.braking and state.brake_cond_step >= 0
            and state.step >= state.brake_cond_step + state.delay_steps):
        state.braking = True

    dt = cfg.dt
    state.ego_x += state.ego_v * dt
    if state.triggered and state.walked < cfg.ped_stop_after:
        state.walked += state.ped_speed * dt
    if state.braking:
        state.ego_v = max(0.0, state.ego_v - cfg.max_decel * dt)
    state.step += 1
    return state


class BuiltinAebSimulator:
    """Deterministic pedestrian-crossing AEB backend.

    Searched variables are looked up by name: ``PedSpeed`` (m/s),
    ``EgoSpeed`` (m/s) and ``PedDist`` (m, euclidean trigger distance).
    ``fixed_settings`` entries override world-config fields.
    """

    name = "builtin-aeb"
    required_variables = ("PedSpeed", "EgoSpeed", "PedDist")

    def __init__(self, config: AebWorldConfig | None = None):
        self.config = config or AebWorldConfig()

    def config_for(self, spec: ScenarioSpec) -> AebWorldConfig:
        if not spec.fixed_settings:
            return self.config
        known = {f.name for f in fields(AebWorldConfig)}
        overrides = {}
        for key, value in spec.fixed_settings.items():
            if key not in known:
                raise SimulationError(f"unknown world setting '{key}'")
            current = getattr(self.config, key)
            if isinstance(current, tuple):
                value = tuple(float(v) for v in value)
            else:
                value = float(value)
            overrides[key] = value
        return replace(self.config, **overrides)

    def _variables(self, spec: ScenarioSpec, test_input: TestInput) -> dict[str, float]:
        values = dict(zip(spec.names, np.asarray(test_input, dtype=float)))
        missing = [v for v in self.required_variables if v not in values]
        if missing:
            raise SimulationError(f"scenario must define variables {missing}",
                                  test_input=test_input)
        return values

    def simulate(self, spec: ScenarioSpec, test_input: TestInput,
                 seed: int = 0) -> SimulationOutput:
        cfg = self.config_for(spec)
        var = self._variables(spec, test_input)
        ped_speed = var["PedSpeed"]
        ped_dist = var["PedDist"]

        state = WorldState(
            ego_x=cfg.ego_start[0], ego_y=cfg.ego_start[1], ego_v=var["EgoSpeed"],
            ped_speed=ped_speed, ped_dist=ped_dist,
            delay_steps=math.ceil(cfg.reaction_delay / cfg.dt - 1e-9),
        )

        n_max = int(round(cfg.horizon / cfg.dt))
        pass_x = cfg.ped_pos[0] + 5.0
        radius = cfg.collision_radius
        stop_after = cfg.ped_stop_after
        dirx, diry = cfg.ped_cross_direction
        px0, py0 = cfg.ped_pos
        ego_y = state.ego_y

        ego_xs: list[float] = []
        ego_vs: list[float] = []
        walkeds: list[float] = []
        trigger_rec = -1  # first recorded step with the pedestrian walking

        collision = False
        collision_time: Optional[float] = None
        while True:
            walked = state.walked
            px = px0 + dirx * walked
            py = py0 + diry * walked
            dx = px - state.ego_x
            dy = py - ego_y
            dist = math.sqrt(dx * dx + dy * dy)

            ego_xs.append(state.ego_x)
            ego_vs.append(state.ego_v)
            walkeds.append(walked)
            if trigger_rec < 0 and state.triggered:
                trigger_rec = state.step

            if dist < radius:
                collision = True
                collision_time = state.step * cfg.dt
                break
            if state.step >= n_max:
                break
            if state.ego_x > pass_x:
                break
            if state.ego_v <= 0.0 and walked >= stop_after:
                break
            step_world(state, cfg, dist)

        k = len(ego_xs)
        t = np.arange(k) * cfg.dt
        ego = np.empty((k, 5))
        ego[:, 0] = t
        ego[:, 1] = np.asarray(ego_xs)
        ego[:, 2] = ego_y
        ego[:, 3] = 0.0
        ego[:, 4] = np.asarray(ego_vs)

        walked_arr = np.asarray(walkeds)
        ped = np.empty((k, 5))
        ped[:, 0] = t
        ped[:, 1] = px0 + dirx * walked_arr
        ped[:, 2] = py0 + diry * walked_arr
        ped[:, 3] = math.atan2(diry, dirx)
        if trigger_rec < 0:
            ped[:, 4] = 0.0
        else:
            walking = (np.arange(k) >= trigger_rec) & (walked_arr < stop_after)
            ped[:, 4] = np.where(walking, ped_speed, 0.0)

        return SimulationOutput(
            dt=cfg.dt,
            actors={"ego": ego, "pedestrian": ped},
            collision=collision,
            collision_time=collision_time,
            metadata={"simulator": self.name, "seed": str(seed), "dt": str(cfg.dt)},
        )


def simulate_batch(simulator, spec: ScenarioSpec, inputs: list[TestInput],
                   seed: int = 0, workers: int = 1) -> list:
    """Run many scenario instances; results keep submission order.

    Each entry of the result is either a SimulationOutput or the
    SimulationError raised for that input; a failing instance never
    aborts the rest of the batch.
    """
    jobs = [EvaluationJob(i, x, seed) for i, x in enumerate(inputs)]

    def run(job: EvaluationJob):
        try:
            return simulator.simulate(spec, job.test_input, job.seed)
        except SimulationError:
            raise
        except Exception as exc:  # normalize backend surprises
            raise SimulationError(str(exc), test_input=job.test_input) from exc

    return evaluate_pool(jobs, run, workers=workers)
