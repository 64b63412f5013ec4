import numpy as np
import pytest

from adrdyn.adr import DRParams
from adrdyn.problems import catalog, problem_quad_quad


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def p1():
    return problem_quad_quad(2.0, [1.0], -0.5, [-1.0])


@pytest.fixture
def p1_c1():
    return DRParams.c1(2.0, -0.5, 1.0, 0.25)


@pytest.fixture
def p1_c2():
    # mu in [2 - 2*gamma*beta, 2 + 2*gamma*alpha] = [3, 6]
    return DRParams.c2(2.0, -0.5, 1.0, 4.0)


@pytest.fixture(scope="session")
def problems():
    return catalog()


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
