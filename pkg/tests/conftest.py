import pytest

from odum.probes import HostPolicy, ProbeClient
from odum.probes.mockportal import MockPortal
from odum.schema import load_schema

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def schema():
    return load_schema()


@pytest.fixture(scope="session")
def portal():
    with MockPortal() as server:
        yield server


@pytest.fixture
def fast_client():
    """Client without politeness spacing, for tests that do not measure it."""
    return ProbeClient(timeout=10, policy=HostPolicy(max_concurrent=2, min_interval=0.0))


@pytest.fixture
def verdict():
    """Record and print one pass/fail line for an acceptance criterion, then assert it."""

    def _verdict(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _verdict


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
