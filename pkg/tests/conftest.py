import pytest

from jumpput import kernels
from jumpput.grid import build_grid
from jumpput.iteration import run_fixed_point
from jumpput.jump_measure import JumpMeasure
from jumpput.lcp_solver import SolverConfig
from jumpput.model import ModelParams

K = 100.0

BS = ModelParams(r=0.05, sigma=0.2, lam=0.0, K=K, T0=1.0)
MERTON = ModelParams(r=0.05, sigma=0.2, lam=0.3, K=K, T0=0.5, jump=JumpMeasure.lognormal(-0.045, 0.3))
TWO_POINT = ModelParams(r=0.05, sigma=0.25, lam=0.3, K=K, T0=1.0,
                        jump=JumpMeasure.discrete([0.7, 1.3], [0.5, 0.5]))

# Filled by tests/test_acceptance.py, printed at the end of the session.
ACCEPTANCE_LINES = []


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def merton_run():
    grid = build_grid(MERTON, 200, 100)
    res = run_fixed_point(MERTON, grid, SolverConfig(), keep_iterates=True)
    return grid, res


@pytest.fixture(scope="session")
def bs_run():
    grid = build_grid(BS, 200, 100)
    res = run_fixed_point(BS, grid, SolverConfig())
    return grid, res


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
