import numpy as np
import pytest

from nlcsim.grid import Domain


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def dom8():
    return Domain(8)


@pytest.fixture
def dom16():
    return Domain(16)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
