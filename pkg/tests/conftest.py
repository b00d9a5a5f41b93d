"""Collects ``criterion`` markers and prints one PASS/FAIL line per acceptance criterion."""

import pytest

_OUTCOMES: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        ok = rep.passed
        secs = rep.duration
        _OUTCOMES.setdefault(marker.args[0], []).append((item.name, ok, secs))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_OUTCOMES):
        runs = _OUTCOMES[k]
        ok = all(r[1] for r in runs)
        failed = [r[0] for r in runs if not r[1]]
        secs = sum(r[2] for r in runs)
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  ({len(runs)} checks, {secs:.1f} s)"
        if failed:
            line += "  failed: " + ", ".join(failed)
        terminalreporter.write_line(line)
