import functools

import numpy as np
import pytest

from sweepkernel import fixtures as fx
from sweepkernel.oracle import SolidDistance
from sweepkernel.swept import sweep


@functools.lru_cache(maxsize=None)
def swept_case(name):
    solid, traj = fx.SIMPLE_SWEEPS[name]()
    return solid, traj, sweep(solid, traj)


@functools.lru_cache(maxsize=None)
def distance_for(name):
    solid, _ = fx.SIMPLE_SWEEPS[name]()
    return SolidDistance(solid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def rotating_cube_sweep():
    return swept_case("rotating_cube")


@pytest.fixture(scope="session")
def capsule_sweep():
    return swept_case("capsule")


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def report(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
        ACCEPTANCE_LINES.append(line)
        tr = request.config.pluginmanager.get_plugin("terminalreporter")
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
