"""Acceptance bookkeeping: one pass/fail line per criterion in the terminal summary.

Tests opt in with ``@pytest.mark.criterion(number, title)``; several tests may
share a number and the criterion passes only if all of them do. A test can add
a measured value to its line through the ``detail`` fixture.
"""

from collections import defaultdict

import pytest

_RESULTS = defaultdict(list)  # number -> [(title, test name, passed, details)]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.fixture
def detail(request):
    def add(text):
        request.node.user_properties.append(("detail", str(text)))
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, title = marker.args
        details = [v for k, v in item.user_properties if k == "detail"]
        if report.skipped:
            return
        _RESULTS[number].append((title, item.name, report.passed, details))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        checks = _RESULTS[number]
        passed = all(ok for _, _, ok, _ in checks)
        title = checks[0][0]
        failed = [name for _, name, ok, _ in checks if not ok]
        notes = "; ".join(d for *_, ds in checks for d in ds)
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}"
        if failed and len(checks) > 1:
            line += f"  [failed: {', '.join(failed)}]"
        if notes:
            line += f"  ({notes})"
        tr.write_line(line, green=passed, red=not passed)
