"""Prints one PASS/FAIL line per acceptance criterion after the run."""

import pytest

_acceptance_reports = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    doc = item.function.__doc__ or item.name
    report.acceptance_label = doc.strip().splitlines()[0]
    _acceptance_reports.append(report)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_reports:
        return
    terminalreporter.section("acceptance criteria")
    for report in _acceptance_reports:
        status = "PASS" if report.passed else "FAIL"
        terminalreporter.write_line(
            f"ACCEPTANCE {status}: {report.acceptance_label}")
