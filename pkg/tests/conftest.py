import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest

from mobius_dyn import INF, OrbitSpec


def make_spec(p, m, u0):
    return OrbitSpec.build(p, m, INF if u0 is None else u0)


@pytest.fixture
def fib11():
    """psi(x) = (x + 1)/x over F_11 from 0: period 10."""
    return OrbitSpec.build(11, (1, 1, 1, 0), 0)


@pytest.fixture
def shift7():
    """psi(x) = x + 1 over F_7 from 0."""
    return OrbitSpec.build(7, (1, 1, 0, 1), 0)


# -- acceptance summary ----------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion number and label")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    n, name = mark.args
    ok = rep.passed and _CRITERIA.get(n, (name, True))[1]
    _CRITERIA[n] = (name, ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        name, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n} {name}: {'PASS' if ok else 'FAIL'}")
