"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import pytest

_OUTCOMES: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _OUTCOMES.setdefault(int(marker.args[0]), []).append((item.name, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_OUTCOMES):
        rows = _OUTCOMES[criterion]
        status = "PASS" if all(ok for _, ok, _ in rows) else "FAIL"
        terminalreporter.write_line(f"criterion {criterion}: {status}")
        for name, ok, detail in rows:
            terminalreporter.write_line(f"    {'ok  ' if ok else 'FAIL'} {name}: {detail}")
