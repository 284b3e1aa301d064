"""Shared test plumbing.

The acceptance tests record one verdict line per criterion here;
printing them from a terminal-summary hook keeps them visible in plain
``pytest -v`` output, where per-test stdout is captured.
"""

CRITERION_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES):
            terminalreporter.write_line(line)
