"""Shared test plumbing.

The acceptance tests (test_acceptance.py) register one line per criterion via
the ``acceptance`` fixture; ``pytest_terminal_summary`` reprints the collected
block after the run so the pass/fail table is visible without ``-s``.
"""

import pytest

_LINES: list[str] = []


def _record(num: int, ok: bool, detail: str) -> bool:
    line = f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}  {detail}"
    _LINES.append(line)
    print(line)
    return ok


@pytest.fixture
def acceptance():
    """Callable (num, ok, detail) -> ok that records one summary line."""
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
