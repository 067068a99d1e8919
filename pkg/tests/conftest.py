import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

DATA = Path(__file__).parent / "data"
_REPORT: list[tuple[int, str, str]] = []


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def report():
    """Record one acceptance line: ``report(criterion, passed, detail)``."""
    def _add(criterion: int, passed, detail: str):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        line = f"criterion {criterion:2d}: {status:5s} {detail}"
        _REPORT.append((criterion, status, line))
        print(line)
    return _add


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(_REPORT):
        terminalreporter.write_line(line)
