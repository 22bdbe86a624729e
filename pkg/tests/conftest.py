import pytest

from qbplan.config import ProblemConfig, SolverSettings
from qbplan.value_iteration import solve

# robotic-probe task: unit-precision observations, prior precision 1/4, means in [-5, 5]
PAPER = dict(r=1.0, tau0=0.25, mu_lo=-5.0, mu_hi=5.0)


def paper_config(c: float) -> ProblemConfig:
    return ProblemConfig(c=c, **PAPER)


@pytest.fixture(scope="session")
def plan_09():
    return solve(paper_config(0.09))


@pytest.fixture(scope="session")
def plan_05():
    return solve(paper_config(0.05))


@pytest.fixture(scope="session")
def coarse():
    """Cheap solver settings for property tests."""
    return SolverSettings(grid_points=401, quad_order=16)


# acceptance verdicts, filled by test_acceptance and echoed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
