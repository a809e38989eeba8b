"""Shared pytest wiring: verdict lines for the acceptance criteria.

The acceptance tests register one human-readable pass/fail line each; the
terminal-summary hook prints them after the run, outside output capture, so
the verdicts are always visible.
"""

VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
