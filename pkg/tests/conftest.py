import numpy as np
import pytest

from bellmd.lattice import GridSpec, build_symmetric_scenario, default_layout, Setting


@pytest.fixture
def grid8():
    return GridSpec(8, 8)


@pytest.fixture
def grid4():
    return GridSpec(4, 4)


@pytest.fixture
def scenario06(grid8):
    return build_symmetric_scenario(grid8, 0.6)


@pytest.fixture
def ts4(grid4):
    return default_layout(grid4)[Setting.AB]


def random_prior(rng, shape):
    w = rng.uniform(size=shape)
    return w / w.sum()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number][1])
