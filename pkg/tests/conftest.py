import re

import pytest

_CRITERIA = {}


@pytest.fixture
def record(request):
    """Attach a one-line detail to the current acceptance test."""

    def _record(text: str) -> None:
        request.node.user_properties.append(("criterion", text))
        print(text)

    return _record


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m or not (report.when == "call" or report.failed):
        return
    n = int(m.group(1))
    ok, details = _CRITERIA.get(n, (True, []))
    details = details + [v for k, v in report.user_properties if k == "criterion" and v not in details]
    _CRITERIA[n] = (ok and report.passed, details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, details = _CRITERIA[n]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)
