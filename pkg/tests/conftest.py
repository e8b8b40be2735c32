"""Collects the outcome of each acceptance criterion and prints one line per criterion."""

import re

_results = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or report.outcome != "passed":
        _results[key] = ("PASS" if report.outcome == "passed" else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), (status, detail) in sorted(_results.items()):
        line = f"criterion {n} [{name}]: {status}"
        terminalreporter.write_line(f"{line} - {detail}" if detail else line)
