import pytest
from hypothesis import settings

import censolve as cs

settings.register_profile("ci", derandomize=True, max_examples=50, deadline=None)
settings.load_profile("ci")

UNIT = cs.Domain1D(0.0, 1.0)

# one pass/fail line per acceptance criterion, printed in the summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(number: int, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append(f"[criterion {number:02d}] {status}  {detail}")
        assert ok, f"criterion {number}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def unit_domain():
    return UNIT


@pytest.fixture(scope="session")
def censored_spec():
    return cs.KernelSpec(kind=cs.CENSORED, sigma=0.5, domain=UNIT)


@pytest.fixture(scope="session")
def regional_spec():
    return cs.KernelSpec(kind=cs.REGIONAL, sigma=0.5, domain=UNIT)


@pytest.fixture(scope="session")
def grid64():
    return cs.Grid(domain=UNIT, N=64)


@pytest.fixture(scope="session")
def grid100():
    return cs.Grid(domain=UNIT, N=100)
