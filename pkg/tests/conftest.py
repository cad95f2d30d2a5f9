import numpy as np
import pytest

from unrel.graph import MultiGraph


def two_triangles_bridge() -> MultiGraph:
    return MultiGraph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bridge_graph():
    return two_triangles_bridge()


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
