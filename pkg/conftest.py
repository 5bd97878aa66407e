"""Repo-wide pytest glue: collect test_criterion_* outcomes from every
package's tests and print one PASS/FAIL line per criterion at the end."""

import re

_CRITERION_PAT = re.compile(r"test_criterion_(\d+)_(\w+)")
_criterion_results = {}


def pytest_runtest_logreport(report):
    m = _CRITERION_PAT.search(report.nodeid)
    if not m:
        return
    num, slug = int(m.group(1)), m.group(2).replace("_", " ")
    if report.when == "call" or (report.when == "setup" and report.failed):
        prev = _criterion_results.get(num)
        # a criterion spread over several tests or params passes only if all do
        outcome = report.outcome
        if prev is not None and prev[0] != "passed":
            outcome = prev[0]
        _criterion_results[num] = (outcome, slug)


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criterion_results):
        outcome, slug = _criterion_results[num]
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {word} - {slug}")
