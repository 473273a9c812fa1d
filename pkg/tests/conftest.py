from __future__ import annotations

import pytest

from splice_lab.cutoffs import make_gluing
from splice_lab.harness.testmaps import TestMapSpec, generate_test_pair, map_grids

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_grids():
    """h_t = 0.5, ns = 16 windows wide enough for R up to 49."""
    return map_grids(49.0, 0.5, 16)


@pytest.fixture(scope="session")
def small_pair(small_grids):
    p = generate_test_pair(TestMapSpec(), small_grids, 11)
    return p.u_minus, p.u_plus


@pytest.fixture(scope="session")
def small_gluing():
    return make_gluing(36.0, 0.0, 0.5, 16)


@pytest.fixture(scope="session")
def rotated_gluing():
    from math import pi
    return make_gluing(36.0, 3 * 2 * pi / 16, 0.5, 16)
