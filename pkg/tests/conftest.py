import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spdedist.spaces import Filipovic, Grid

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def log_grid():
    return Grid.log_spaced()


@pytest.fixture(scope="session")
def small_grid():
    return Grid.log_spaced(x_max=20.0, n=64, scale=0.5)


@pytest.fixture(scope="session")
def filipovic(log_grid):
    return Filipovic(0.1, log_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
