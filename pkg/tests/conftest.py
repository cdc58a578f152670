import re

import pytest

from hexsyn.code import build_layout

_DETAILS: dict[int, str] = {}
_OUTCOMES: dict[int, tuple[str, str]] = {}
_NAME = re.compile(r"test_criterion_(\d+)_(\w+)")


@pytest.fixture(scope="session")
def layout():
    return build_layout(3)


@pytest.fixture
def record(request):
    """Attach a one-line result summary to the running acceptance criterion."""
    m = _NAME.search(request.node.name)

    def _record(text: str):
        if m:
            _DETAILS[int(m.group(1))] = text

    return _record


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m or report.when != "call" and report.outcome == "passed":
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES[n] = ("PASS" if report.outcome == "passed" else "FAIL", m.group(2).replace("_", " "))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        status, name = _OUTCOMES[n]
        detail = _DETAILS.get(n, "")
        terminalreporter.write_line(f"criterion {n:2d} {status}  {name}: {detail}")
