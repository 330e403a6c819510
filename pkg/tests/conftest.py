"""Shared pytest configuration.

The acceptance module accumulates one formatted line per criterion; the
terminal-summary hook below prints them in a single block at the end of
the run so the measured values are visible regardless of verbosity.
"""

import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None) if mod else None
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
