import _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _report.LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in _report.LINES:
        terminalreporter.write_line(line)
