import math

import pytest

from qmfs.model import load_preset, validate
from qmfs.scenarios import bae_config


@pytest.fixture(scope="session")
def weak():
    return validate(load_preset("fig2_weak"))


@pytest.fixture(scope="session")
def strong():
    return validate(load_preset("fig2_strong"))


@pytest.fixture(scope="session")
def tomo():
    return validate(load_preset("fig3_tomography"))


@pytest.fixture(scope="session")
def device():
    return validate(load_preset("paper_device"))


@pytest.fixture
def bae(weak):
    """BAE config factory on the weak-cooling preset."""
    def make(C, phases=(0.0, 0.0, 0.0, 0.0), base=None, **kw):
        return bae_config(base or weak, C, phases, **kw)
    return make


def rel(a, b):
    return abs(a - b) / abs(b)


TWO_PI = 2.0 * math.pi


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
