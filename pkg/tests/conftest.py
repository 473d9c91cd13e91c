import numpy as np
import pytest

from cavitybragg.constants import TWO_PI

PHI_TILTED = -5.07
LAMBDA = 852.347


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def hz(x):
    """ordinary-Hz value to angular units"""
    return TWO_PI * x


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
