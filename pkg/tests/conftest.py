import numpy as np
import pytest

from faultdarcy.mesh import build_structured, mesh_from_arrays
from faultdarcy.problems import manufactured


@pytest.fixture
def square2():
    """Unit square split along the anti-diagonal into two cells."""
    verts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    return mesh_from_arrays(verts, [(1, 2, 0), (2, 1, 3)])


@pytest.fixture
def unit_triangle():
    return mesh_from_arrays([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(1, 2, 0)])


@pytest.fixture(scope="session")
def manufactured_problem():
    return manufactured()


@pytest.fixture(scope="session")
def mesh8():
    return build_structured(8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
