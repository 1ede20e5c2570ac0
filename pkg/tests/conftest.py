import warnings

import pytest

from gravent import DetectorConfig, StarConfig

# Fig. 1 working point, lengths in units of the star radius
FIG1_SIGMA = 0.00674
FIG1_DELTA_E = 1.0
FIG1_MASS = 0.001
FIG1_LPS = (0.0095, 0.01)


def quiet_star(mass, radius=1.0):
    """StarConfig without the strong-field warnings (unit-mass tests)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return StarConfig(mass, radius)


@pytest.fixture
def fig1_detector():
    return DetectorConfig(FIG1_DELTA_E, FIG1_SIGMA)


@pytest.fixture
def fig1_star():
    return StarConfig(FIG1_MASS)


# acceptance criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
