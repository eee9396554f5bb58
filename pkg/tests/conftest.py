import math

import pytest

from swarmbeam.geometry import dual_linear, equilateral_dual, expand_topology

SQRT3 = math.sqrt(3.0)


@pytest.fixture
def fig6_topology():
    return dual_linear(0.8, 0.4, 0.32, 50, 49)


@pytest.fixture
def fig7_topology():
    return equilateral_dual(SQRT3 / 3, 50, 49)


@pytest.fixture
def fig8_topology():
    return equilateral_dual(0.6, 50, 49)


@pytest.fixture
def fig7_layout(fig7_topology):
    return expand_topology(fig7_topology)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
