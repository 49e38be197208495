"""Shared pytest hooks: collect the release-gate verdict lines emitted
by test_acceptance and replay them as one block at the end of the run,
so the pass/fail record survives output capture."""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
