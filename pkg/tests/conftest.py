import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lifespan.spectral import Grid, forward

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def grid32():
    return Grid(32)


def scalar(grid, fn):
    """Forward transform of ``fn(x1, x2, x3)`` sampled on ``grid``."""
    return forward(fn(*grid.coords()), grid)


def vector(grid, fn):
    x = grid.coords()
    return forward(np.stack([np.broadcast_to(c, grid.shape) for c in fn(*x)]), grid)


TWO_PI_CUBED = (2 * math.pi) ** 3
