import pytest

# acceptance verdict lines, filled by tests/test_acceptance.py
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in VERDICTS:
        terminalreporter.write_line(line)
