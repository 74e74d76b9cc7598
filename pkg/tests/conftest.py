from __future__ import annotations

from pathlib import Path

import pytest

from cohesive.modelio import load_model

FIXTURES = Path(__file__).parent / "fixtures"

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")
    config.addinivalue_line("markers", "slow: long-running randomized check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "passed": True, "ran": False, "notes": []})
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry["ran"] = True
        if rep.outcome != "passed":
            entry["passed"] = False
            entry["notes"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        if not entry["ran"]:
            continue
        status = "PASS" if entry["passed"] else "FAIL"
        line = f"criterion {n:2d} {status}  {entry['title']}"
        if entry["notes"]:
            line += f"  (failed: {', '.join(entry['notes'])})"
        terminalreporter.write_line(line)


@pytest.fixture
def fixture_model():
    def load(name: str, **kw):
        return load_model(FIXTURES / f"{name}.yaml", **kw)
    return load
