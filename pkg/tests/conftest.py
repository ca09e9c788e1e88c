from __future__ import annotations

import pytest

from hailstorm import rain
from hailstorm.geometry import PointSet
from hailstorm.verify import fixture_a


@pytest.fixture
def fixture_realization() -> rain.Realization:
    """Three stones in d=1: two stack at the origin, the third lands far away."""
    return fixture_a()


@pytest.fixture
def origin1() -> PointSet:
    return PointSet([(0.0,)])


# PASS/FAIL lines appended by the acceptance tests
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
