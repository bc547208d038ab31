"""Per-criterion PASS/FAIL summary for the acceptance suite.

Tests tagged ``@pytest.mark.criterion(k)`` are grouped by ``k``; a
criterion passes when every test in its group passes.
"""
from collections import defaultdict

import pytest

_results: dict[int, list[tuple[str, str]]] = defaultdict(list)

TITLES = {
    1: "minplus eigenvalue oracle",
    2: "circular road flow",
    3: "exclusion trace",
    4: "tent system",
    5: "junction eigenpair verification",
    6: "junction trajectory properties",
    7: "fundamental diagram",
    8: "approximation formula",
    9: "hybrid calculus",
    10: "composition oracle",
    11: "Petri consistency",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _results[mark.args[0]].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_results):
        tests = _results[k]
        ok = all(o == "passed" for _, o in tests)
        failed = [name for name, o in tests if o != "passed"]
        line = f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {TITLES.get(k, '')}"
        if failed:
            line += "  (failing: " + ", ".join(failed) + ")"
        tr.write_line(line)
