from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _report(criterion: int, ok: bool, detail: str) -> None:
        line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
