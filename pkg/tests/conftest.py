import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "diffusion matches dense oracle (200 networks, 1e-12, < 10 s)",
    2: "worked 3-node example gives 1, 26/27, 11/18",
    3: "clamped >= standard beliefs and recall (100 fixtures)",
    4: "belief networks are row-stochastic within 1e-12",
    5: "annotation rule table and permutation invariance",
    6: "betweenness, cycle PageRank and PageRank mass oracles",
    7: "PR curve equals brute-force enumeration (100 fixtures)",
    8: "run reports bitwise identical across reruns and 1/4/8 threads",
    9: "1M-node / 10M-edge clamped diffusion < 30 s, < 4 GB",
    10: "full-data reproductions within 10% relative",
}

_results: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test backs numbered acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _results.setdefault(marker.args[0], []).append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, desc in CRITERIA.items():
        outcomes = [o for _, o in _results.get(n, [])]
        if not outcomes:
            status = "NOT RUN"
        elif "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        elif "skipped" in outcomes:
            status = "PASS (some sub-checks skipped by data)"
        else:
            status = "PASS"
        tr.write_line(f"criterion {n:2d}: {status:<40} {desc}")
