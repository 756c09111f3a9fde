import numpy as np
import pytest

from mvgamma.linalg import random_spd

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)


@pytest.fixture
def spd4(gen):
    return random_spd(4, gen)


@pytest.fixture
def corr2():
    return np.array([[1.0, 0.5], [0.5, 1.0]])


@pytest.fixture
def sigma3():
    return np.array([[1.0, 0.3, 0.2], [0.3, 1.2, 0.4], [0.2, 0.4, 0.9]])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
