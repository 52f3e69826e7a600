import numpy as np
import pytest

from fracwave.functionals import ModelParams
from fracwave.grid import GridSpec
from fracwave.groundstate import solve_single_fractional


@pytest.fixture(scope="session")
def grid1d():
    return GridSpec(1, 1024, 80.0)


@pytest.fixture(scope="session")
def sech_record(grid1d):
    """Ground state of -u'' + u = u^3, i.e. sqrt(2) sech(x)."""
    return solve_single_fractional(1.0, 4.0, grid1d)


@pytest.fixture(scope="session")
def phi_2d():
    """phi for s1 = 0.75, p = 4 in 2D (the dichotomy test configuration)."""
    return solve_single_fractional(0.75, 4.0, GridSpec(2, 256, 40.0))


@pytest.fixture(scope="session")
def model_2d():
    return ModelParams(0.75, 0.6, 4.0, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
