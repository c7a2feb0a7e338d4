"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import time

SUITE_BUDGET_S = 60.0

_results = {}
_started = [0.0]


def pytest_sessionstart(session):
    _started[0] = time.perf_counter()


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    key = props.get("criterion")
    if key is None:
        return
    if report.when == "call" or report.failed:
        ok, _, details = _results.get(key, (True, "", []))
        if props.get("detail"):
            details.append(props["detail"])
        elif report.failed:
            details.append(f"{report.nodeid.split('::')[-1]} failed")
        _results[key] = (ok and report.passed, props.get("title", ""), details)


def _elapsed():
    return time.perf_counter() - _started[0]


def pytest_sessionfinish(session, exitstatus):
    if _results and _elapsed() > SUITE_BUDGET_S and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    elapsed = _elapsed()
    for key in sorted(_results, key=int):
        ok, title, details = _results[key]
        detail = "; ".join(details)
        if key == "8":
            within = elapsed < SUITE_BUDGET_S
            ok = ok and within
            detail = f"{detail}; suite {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)"
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {title} -- {detail}")
