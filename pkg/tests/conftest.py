import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tests.strategies import ref

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def axis1():
    return ref((1.0, 0.0, 0.0))


@pytest.fixture
def axis2():
    return ref((0.0, 1.0, 0.0))


@pytest.fixture
def axis3():
    return ref((0.0, 0.0, 1.0))


@pytest.fixture
def generic():
    return ref((0.3, -0.2, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from tests.acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
