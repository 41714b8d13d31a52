import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if name.startswith("test_criterion_"):
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _ACCEPTANCE_RESULTS.append((name.removeprefix("test_criterion_"), outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{outcome}  {name}")
