import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def two_vertex():
    from loopsoup import Region
    return Region([(0, 1), (1, 1)])
