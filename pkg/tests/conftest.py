import functools

import pytest

from qfibounds.channel import build_model
from qfibounds.gauge import g_table

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def cached_table(model, p, grid):
    return g_table(build_model(model, p), grid)


@pytest.fixture(scope="session")
def table():
    """``table(model, p, grid)`` with results shared across the whole session."""
    return cached_table


@pytest.fixture
def report():
    def add(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
