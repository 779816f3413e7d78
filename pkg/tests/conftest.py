import pytest
from hypothesis import HealthCheck, settings

from surplus_consensus.experiments import fixture

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


@pytest.fixture
def fig1():
    return fixture("fig1")


@pytest.fixture
def record_criterion():
    """Record a PASS/FAIL line for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str = ""):
        ACCEPTANCE_RESULTS[number] = ("PASS" if passed else "FAIL", detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")
