import numpy as np
import pytest
from hypothesis import settings

from activeflux.grid import AFState, build_grid

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def sampled_state(f, grid, m=1):
    """State whose averages are 5-point Gauss means of ``f`` and point values samples."""
    s, w = np.polynomial.legendre.leggauss(5)
    xs = grid.centers[:, None] + 0.5 * grid.dx * s[None, :]
    vals = np.asarray(f(xs), dtype=float).reshape(grid.n_cells, 5, m)
    avg = np.einsum("ngm,g->nm", vals, w / 2)
    pv = np.asarray(f(grid.point_positions), dtype=float).reshape(grid.n_points, m)
    return AFState(avg, pv)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def periodic16():
    return build_grid(0.0, 1.0, 16, "periodic")
