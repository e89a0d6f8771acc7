import pytest

from sislab.model import SISParams

# Desk-scale parameter set used throughout (I0 = 0.5, T = 1).
P_STAR = SISParams(beta=0.5, gamma=0.2, b=0.05, K=1.0, sigma=0.1)
# Extinction regime (I0 = 0.5).
P_DAGGER = SISParams(beta=0.25, gamma=0.2, b=0.05, K=1.0, sigma=0.1)


@pytest.fixture
def p_star():
    return P_STAR


@pytest.fixture
def p_dagger():
    return P_DAGGER


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
