import random

import pytest

from curvepow import codec, params
from curvepow.ec import CurveParams

# acceptance results collected for the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ep8():
    """Epoch parameters at d=8 derived from the all-zero digest."""
    return params.epoch_params(8, codec.ZERO_DIGEST, params.DESK_CM_THRESHOLD)


@pytest.fixture(scope="session")
def ep10():
    return params.epoch_params(10, codec.ZERO_DIGEST, params.DESK_CM_THRESHOLD)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def small_curve():
    # y^2 = x^3 + 2x + 3 over F_97, order 100
    return CurveParams(97, 2, 3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
