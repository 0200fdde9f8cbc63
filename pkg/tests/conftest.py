import numpy as np
import pytest

from plate_waveguide.transverse import BC

# acceptance outcomes, filled by tests/test_acceptance.py and echoed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def clamped():
    return BC.CLAMPED


@pytest.fixture(scope="session")
def simply():
    return BC.SIMPLY
