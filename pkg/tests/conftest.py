import numpy as np
import pytest

from kbiq import SpectralModel
from kbiq.dpp import RngStream, sample_projection_dpp

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def model2():
    return SpectralModel(2)


@pytest.fixture(scope="session")
def model3():
    return SpectralModel(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def dpp_configs(model, ns, count, seed=7):
    """``count`` DPP samples with N cycling through ``ns``."""
    return [
        sample_projection_dpp(model, ns[i % len(ns)], RngStream(seed, i))
        for i in range(count)
    ]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
