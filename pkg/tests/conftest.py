"""Shared pytest wiring: prints the acceptance-criteria verdict block."""

import acceptance_report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = acceptance_report.results()
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed in results:
        terminalreporter.write_line(("PASS" if passed else "FAIL") + f"  {name}")
