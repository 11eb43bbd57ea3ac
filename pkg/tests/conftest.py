import sys
from pathlib import Path

import pytest

# make the shared oracle helpers importable as a plain module
sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "ran": False, "why": ""})
    if report.when == "call" or report.failed:
        entry["ran"] = True
        if report.failed:
            entry["passed"] = False
            msg = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else ""
            entry["why"] = msg.splitlines()[0][:140] if msg else report.when


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        if not e["ran"]:
            status = "SKIP"
        else:
            status = "PASS" if e["passed"] else "FAIL"
        line = f"criterion {number:2d} {status}  {e['title']}"
        if status == "FAIL" and e["why"]:
            line += f"  ({e['why']})"
        terminalreporter.write_line(line)
