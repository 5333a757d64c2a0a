import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

# compiled kernels make first calls slow
settings.register_profile("default", deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion."""

    def record(number, name, ok, detail=""):
        verdict = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append(f"[{verdict}] criterion {number:>2}: {name} {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
