"""Shared fixtures and the per-criterion acceptance summary."""

from __future__ import annotations

import pytest

from boxcommit.protocols import build_commit_ot, build_commit_pr
from boxcommit.security import delayed_alice, eval_binding, search_optimal_cheat

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    n, title = marker.args
    entry = _criteria.setdefault(n, {"title": title, "ok": True, "ran": False})
    if report.when == "call":
        entry["ran"] = True
    if report.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        entry = _criteria[n]
        verdict = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict}  {entry['title']}")


# expensive results shared by several modules


@pytest.fixture(scope="session")
def ot_search():
    return {n: search_optimal_cheat(build_commit_ot(n)) for n in (1, 2)}


@pytest.fixture(scope="session")
def delayed_binding():
    """Delayed-attack binding reports keyed by box count k."""
    out = {}
    for n in (1, 2, 3):
        spec = build_commit_pr(n)
        out[spec.k] = eval_binding(spec, delayed_alice(spec), optimize_reveal=False)
    return out
