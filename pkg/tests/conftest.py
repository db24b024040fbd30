import test_acceptance_log


def pytest_terminal_summary(terminalreporter):
    lines = test_acceptance_log.LINES
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
