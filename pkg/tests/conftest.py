import pytest
from mpmath import mp

from resurgo.exact import RatFunc
from resurgo.perturbative import ODESpec, expand_perturbative


@pytest.fixture(autouse=True)
def _precision():
    with mp.workprec(256):
        yield


@pytest.fixture(scope="session")
def z():
    return RatFunc.z()


@pytest.fixture(scope="session")
def worked_spec():
    z = RatFunc.z()
    return ODESpec([2 * z * z, -3 * z, 1], [z])


@pytest.fixture(scope="session")
def euler_spec():
    return ODESpec((1, 1), (0, 1), independent="epsilon")


@pytest.fixture(scope="session")
def worked_series(worked_spec):
    with mp.workprec(256):
        return expand_perturbative(worked_spec, 200)


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
