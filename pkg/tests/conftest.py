import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; returns the outcome."""

    def record(criterion, ok, detail):
        _VERDICTS.append((criterion, f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS, key=lambda v: v[0]):
            terminalreporter.write_line(line)
