import math

import pytest

from qcurv.optimizer import SolveOptions
from qcurv.pipeline import make_state, solve
from qcurv.problem import ProblemSpec

BENCH = dict(n=3, Lambda=2 * math.pi ** 2, beta=0.0, p=(0, -1), q=(0, -1))


@pytest.fixture(scope="session")
def bench_spec():
    return ProblemSpec(**BENCH)


@pytest.fixture(scope="session")
def small_state(bench_spec):
    return make_state(bench_spec, 24, 64)


@pytest.fixture(scope="session")
def bench_solved(bench_spec):
    return solve(bench_spec, SolveOptions(L=48, M=112))


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    key = int(name.split("_")[2])
    if report.when == "call" or report.failed:
        ok = report.passed and _CRITERIA.get(key, True)
        _CRITERIA[key] = ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {key}: {'PASS' if _CRITERIA[key] else 'FAIL'}")
