import numpy as np
import pytest

from scensearch import (AebWorldConfig, BuiltinAebSimulator, SimulationError,
                        detect_collision, simulate_batch, validate_output)
from scensearch.simulation import WorldState, step_world

from conftest import simulate_crossing


def make_state(**kw):
    defaults = dict(ego_x=0.0, ego_y=0.0, ego_v=10.0, ped_speed=1.0,
                    ped_dist=0.0, delay_steps=10)
    defaults.update(kw)
    return WorldState(**defaults)


class TestStepWorld:
    def test_plain_advance(self):
        cfg = AebWorldConfig()
        state = step_world(make_state(ego_v=10.0), cfg)
        assert state.ego_x == pytest.approx(0.1)
        assert state.ego_v == 10.0

    def test_braking_decrement(self):
        cfg = AebWorldConfig()
        state = make_state(ego_v=10.0)
        state.braking = True
        step_world(state, cfg)
        assert state.ego_v == pytest.approx(10.0 - 8.0 * 0.01)

    def test_speed_clamped_at_zero(self):
        cfg = AebWorldConfig()
        state = make_state(ego_v=0.05)
        state.braking = True
        step_world(state, cfg)
        assert state.ego_x == pytest.approx(0.0005)
        assert state.ego_v == 0.0

    def test_pedestrian_stops_after_path_length(self):
        cfg = AebWorldConfig()
        state = make_state(ego_v=0.0, ped_speed=2.0, ped_dist=1000.0)
        for _ in range(1000):
            step_world(state, cfg)
        assert state.walked <= cfg.ped_stop_after + 2.0 * cfg.dt


class TestBuiltinSimulator:
    def test_zero_trigger_distance_keeps_pedestrian_static(self, crossing_problem):
        out = simulate_crossing(crossing_problem, 1.5, 10.0, 0.0)
        ped = out.actors["pedestrian"]
        assert not out.collision
        assert np.all(ped[:, 1] == 80.0)
        assert np.all(ped[:, 2] == 4.0)
        assert np.all(ped[:, 4] == 0.0)

    def test_slow_ego_never_collides(self, crossing_problem):
        out = simulate_crossing(crossing_problem, 0.5, 1.0, 60.0)
        assert not out.collision
        assert out.collision_time is None

    def test_fast_ego_late_trigger_collides(self, crossing_problem):
        # verified against the closed-form stopping-distance analysis
        out = simulate_crossing(crossing_problem, 2.0, 21.0, 30.0)
        assert out.collision
        assert out.collision_time is not None

    def test_repeat_run_bit_identical(self, crossing_problem):
        rng = np.random.default_rng(11)
        lo, hi = crossing_problem.spec.lower, crossing_problem.spec.upper
        for _ in range(100):
            x = lo + rng.random(3) * (hi - lo)
            a = crossing_problem.simulator.simulate(crossing_problem.spec, x, 0)
            b = crossing_problem.simulator.simulate(crossing_problem.spec, x, 0)
            assert a.collision == b.collision
            assert a.collision_time == b.collision_time
            for name in a.actors:
                assert np.array_equal(a.actors[name], b.actors[name])

    def test_output_invariants_hold(self, crossing_problem):
        rng = np.random.default_rng(12)
        lo, hi = crossing_problem.spec.lower, crossing_problem.spec.upper
        for _ in range(25):
            x = lo + rng.random(3) * (hi - lo)
            out = crossing_problem.simulator.simulate(crossing_problem.spec, x, 0)
            assert validate_output(out) == []

    def test_timestamps_are_exact_grid(self, crossing_problem):
        out = simulate_crossing(crossing_problem, 2.0, 15.0, 40.0)
        k = len(out.actors["ego"])
        assert np.array_equal(out.actors["ego"][:, 0], np.arange(k) * out.dt)
        assert np.array_equal(out.actors["pedestrian"][:, 0], np.arange(k) * out.dt)

    def test_physical_sanity(self, crossing_problem):
        rng = np.random.default_rng(13)
        lo, hi = crossing_problem.spec.lower, crossing_problem.spec.upper
        cfg = AebWorldConfig()
        for _ in range(30):
            x = lo + rng.random(3) * (hi - lo)
            out = crossing_problem.simulator.simulate(crossing_problem.spec, x, 0)
            ego = out.actors["ego"]
            ped = out.actors["pedestrian"]
            assert np.all(np.diff(ego[:, 1]) >= 0.0)  # x non-decreasing
            speeds = ego[:, 4]
            drops = np.nonzero(np.diff(speeds) < 0)[0]
            if drops.size:  # speed non-increasing after brake onset
                assert np.all(np.diff(speeds[drops[0]:]) <= 1e-12)
            steps = np.sqrt(np.diff(ped[:, 1]) ** 2 + np.diff(ped[:, 2]) ** 2)
            assert steps.sum() <= cfg.ped_stop_after + x[0] * cfg.dt + 1e-9

    def test_monotone_criticality_at_midrange(self, crossing_problem):
        collides = {}
        for v in range(1, 23):
            out = simulate_crossing(crossing_problem, 1.75, float(v), 30.0)
            collides[v] = out.collision
        assert any(collides.values())
        for v in range(1, 21):
            if collides[v]:
                assert collides[v + 2], f"EgoSpeed={v} collides but {v+2} does not"

    def test_collision_halts_trajectory(self, crossing_problem):
        out = simulate_crossing(crossing_problem, 2.0, 21.0, 30.0)
        assert out.collision
        last_t = out.actors["ego"][-1, 0]
        assert out.collision_time == pytest.approx(last_t)

    def test_unknown_world_setting_rejected(self, crossing_problem):
        spec = type(crossing_problem.spec)(
            scenario_path="builtin:pedestrian-crossing",
            parameters=crossing_problem.spec.parameters,
            fixed_settings={"max_deccel": 9.0})
        with pytest.raises(SimulationError, match="unknown world setting"):
            BuiltinAebSimulator().simulate(spec, np.array([1.0, 5.0, 10.0]), 0)

    def test_world_config_rejects_bad_values(self):
        with pytest.raises(ValueError, match="dt"):
            AebWorldConfig(dt=0.0)
        with pytest.raises(ValueError, match="horizon"):
            AebWorldConfig(horizon=0.5)
        with pytest.raises(ValueError, match="max_decel"):
            AebWorldConfig(max_decel=-1.0)
        with pytest.raises(ValueError, match="collision_radius"):
            AebWorldConfig(collision_radius=0.0)

    def test_world_setting_override_applies(self, crossing_problem):
        spec = type(crossing_problem.spec)(
            scenario_path="builtin:pedestrian-crossing",
            parameters=crossing_problem.spec.parameters,
            fixed_settings={"horizon": 2.0})
        out = BuiltinAebSimulator().simulate(spec, np.array([0.5, 1.0, 0.0]), 0)
        assert out.actors["ego"][-1, 0] <= 2.0 + 1e-9


class TestDetectCollision:
    def test_never_close(self):
        ego = np.column_stack([np.linspace(0, 10, 50), np.zeros(50)])
        ped = np.column_stack([np.linspace(0, 10, 50), np.full(50, 5.0)])
        assert detect_collision(ego, ped, 1.0, 0.01) is None

    def test_first_contact_time(self):
        ego = np.array([[9.0, 0.0], [10.0, 0.0], [10.4, 0.0]])
        ped = np.array([[10.5, 0.0], [10.5, 0.0], [10.5, 0.0]])
        assert detect_collision(ego, ped, 1.0, 0.01) == pytest.approx(0.01)

    def test_grazing_at_exact_radius_is_safe(self):
        ego = np.array([[0.0, 0.0]])
        ped = np.array([[1.0, 0.0]])
        assert detect_collision(ego, ped, 1.0, 0.01) is None


class TestBatch:
    def test_empty_batch(self, crossing_problem):
        assert simulate_batch(crossing_problem.simulator, crossing_problem.spec,
                              [], seed=0) == []

    def test_batch_matches_single_calls(self, crossing_problem):
        rng = np.random.default_rng(3)
        lo, hi = crossing_problem.spec.lower, crossing_problem.spec.upper
        inputs = [lo + rng.random(3) * (hi - lo) for _ in range(8)]
        batch = simulate_batch(crossing_problem.simulator, crossing_problem.spec,
                               inputs, seed=0, workers=4)
        for x, out in zip(inputs, batch):
            single = crossing_problem.simulator.simulate(crossing_problem.spec, x, 0)
            assert np.array_equal(out.actors["ego"], single.actors["ego"])
            assert out.collision == single.collision

    def test_batch_worker_count_irrelevant(self, crossing_problem):
        rng = np.random.default_rng(4)
        lo, hi = crossing_problem.spec.lower, crossing_problem.spec.upper
        inputs = [lo + rng.random(3) * (hi - lo) for _ in range(8)]
        one = simulate_batch(crossing_problem.simulator, crossing_problem.spec,
                             inputs, seed=0, workers=1)
        four = simulate_batch(crossing_problem.simulator, crossing_problem.spec,
                              inputs, seed=0, workers=4)
        for a, b in zip(one, four):
            assert np.array_equal(a.actors["ego"], b.actors["ego"])
            assert np.array_equal(a.actors["pedestrian"], b.actors["pedestrian"])

    def test_batch_order_follows_submission(self, crossing_problem):
        a = np.array([2.0, 21.0, 30.0])  # collides
        b = np.array([0.5, 1.0, 60.0])   # safe
        fwd = simulate_batch(crossing_problem.simulator, crossing_problem.spec,
                             [a, b], seed=0)
        rev = simulate_batch(crossing_problem.simulator, crossing_problem.spec,
                             [b, a], seed=0)
        assert fwd[0].collision and not fwd[1].collision
        assert rev[1].collision and not rev[0].collision
        assert np.array_equal(fwd[0].actors["ego"], rev[1].actors["ego"])
