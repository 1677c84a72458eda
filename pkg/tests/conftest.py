import sys
from pathlib import Path

import pytest

# oracles.py lives next to the tests
sys.path.insert(0, str(Path(__file__).parent))

CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion; returns ``ok``."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
        CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
