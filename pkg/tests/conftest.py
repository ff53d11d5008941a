import pytest

_REPORT: dict[int, tuple[str, str]] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    status = "PASS" if call.excinfo is None else "FAIL"
    prev = _REPORT.get(number)
    if prev is None or status == "FAIL":
        _REPORT[number] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_REPORT):
        status, title = _REPORT[number]
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title}")
