"""Shared fixtures: the acceptance suite records one line per criterion."""
from __future__ import annotations

import pytest

_CRITERION_LINES: list[str] = []


@pytest.fixture(scope="session")
def criteria_log():
    def record(num: int, description: str, ok: bool) -> None:
        _CRITERION_LINES.append(
            f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {description}")
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria")
        for line in sorted(_CRITERION_LINES):
            terminalreporter.write_line(line)
