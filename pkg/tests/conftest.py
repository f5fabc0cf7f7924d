import pytest

from peakaoi.model import ScDistribution, SystemParams

# criterion id -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def theta10():
    return ScDistribution.from_theta(10)


@pytest.fixture
def unit_params():
    return SystemParams(lam=1.0, pe=0.0, D=1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {key}: {detail}")
