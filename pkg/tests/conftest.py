import re

import pytest

_details: dict[int, str] = {}
_outcomes: dict[int, str] = {}
_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")


@pytest.fixture
def report(request):
    """Record a criterion's checks; returns True when every check passed."""
    number = int(_CRITERION.search(request.node.nodeid).group(1))

    def _report(checks):
        _details[number] = "; ".join(label if ok else f"{label} [FAILED]" for label, ok in checks)
        return all(ok for _, ok in checks)

    return _report


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        _outcomes[n] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        terminalreporter.write_line(f"criterion {n}: {_outcomes[n]}  {_details.get(n, '(no result recorded)')}")
