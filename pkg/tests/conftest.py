import numpy as np
import pytest

from cllfokas.potential import GridSpec, simulate_preset

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def gauss_small():
    """Gaussian run on a coarse grid, shared by the fast unit tests."""
    return simulate_preset("gaussian", GridSpec(12.0, 1.0, 192, 32))


@pytest.fixture(scope="session")
def zero_small():
    return simulate_preset("zero", GridSpec(12.0, 1.0, 64, 16))


@pytest.fixture(scope="session")
def uniform_small():
    return simulate_preset("uniform", GridSpec(4.0, 0.5, 32, 16), a=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
