import re
import sys

_outcomes = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion(?:\[(\d+)\]|_(\d+))$", report.nodeid)
    if not m:
        return
    n = int(m.group(1) or m.group(2))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[n] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    module = sys.modules.get("test_acceptance")
    details = getattr(module, "RESULTS", {})
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        verdict = "PASS" if _outcomes[n] == "passed" else "FAIL"
        detail = details.get(n, (None, _outcomes[n]))[1]
        tr.write_line(f"criterion {n}: {verdict}  {detail}")
