import numpy as np
import pytest

from scensearch import (AdasProblem, ScenarioParameter, ScenarioSpec,
                        pedestrian_crossing_problem)

# filled by the acceptance suite, echoed after the test summary
ACCEPTANCE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)


@pytest.fixture
def crossing_problem() -> AdasProblem:
    return pedestrian_crossing_problem()


@pytest.fixture
def crossing_spec(crossing_problem) -> ScenarioSpec:
    return crossing_problem.spec


@pytest.fixture
def unit_spec() -> ScenarioSpec:
    return ScenarioSpec(
        scenario_path="builtin:unit-box",
        parameters=(
            ScenarioParameter("a", 0.0, 1.0),
            ScenarioParameter("b", 0.0, 1.0),
            ScenarioParameter("c", 0.0, 1.0),
        ),
    )


def simulate_crossing(problem, ped_speed, ego_speed, ped_dist, seed=0):
    x = np.array([ped_speed, ego_speed, ped_dist], dtype=float)
    return problem.simulator.simulate(problem.spec, x, seed)
