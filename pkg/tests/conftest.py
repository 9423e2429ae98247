import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from takagi import ParamCurve

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def takagi_curve():
    return ParamCurve([0.5, 1.0], [0.0], [0.0], order=1)


@pytest.fixture
def lebesgue_third():
    return ParamCurve([1 / 3, 1.0], [0.0], [0.0], order=2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
