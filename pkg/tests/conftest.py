import numpy as np
import pytest

from fabtol.dispersion import surrogate_fixture


@pytest.fixture(scope="session")
def tiln():
    return surrogate_fixture("ti-ln")


@pytest.fixture(scope="session")
def flat():
    return surrogate_fixture("flat")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
