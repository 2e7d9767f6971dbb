import numpy as np
import pytest

from amdtk.generators import grid2d_pattern

CRITERION_LINES = []


@pytest.fixture
def grid9():
    """3x3 rook-adjacency grid, vertices 0..8 row-major, center 4."""
    return grid2d_pattern(3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
