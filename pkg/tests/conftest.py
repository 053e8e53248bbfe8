import numpy as np
import pytest

from tsfrac.delta_calculus import build_mesh
from tsfrac.timescale import Interval, Point, TimeScale, discrete, interval

HYBRID = TimeScale((Interval(0.0, 0.5), Point(0.6), Point(0.75), Interval(0.8, 1.0)))
INTEGERS = discrete(range(5))
QUARTERS = discrete([0.0, 0.25, 0.5, 0.75, 1.0])
UNIT = interval(0.0, 1.0)
SHIFTED = interval(0.5, 1.5)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def hybrid_mesh():
    return build_mesh(HYBRID, 1 / 32)


@pytest.fixture
def unit_mesh():
    return build_mesh(UNIT, 1 / 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
