"""Acceptance bookkeeping: tests marked ``criterion(n, name)`` get one summary line each."""

import pytest

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, name = mark.args
    entry = _results.setdefault(n, {"name": name, "passed": True, "detail": ""})
    if rep.when == "call" or rep.failed:
        if rep.failed:
            entry["passed"] = False
        detail = dict(item.user_properties).get("detail")
        if detail:
            entry["detail"] = detail


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        r = _results[n]
        status = "PASS" if r["passed"] else "FAIL"
        line = f"criterion {n:2d} {status}  {r['name']}"
        if r["detail"]:
            line += f"  [{r['detail']}]"
        terminalreporter.write_line(line)
