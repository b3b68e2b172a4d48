import sys

import numpy as np
import pytest

from nehari_flow.domain import ModelParams, ScalarField, make_domain
from nehari_flow.variational import default_seed, stationary_solve


@pytest.fixture(scope="session")
def params():
    return ModelParams(2.5)


@pytest.fixture(scope="session")
def dom8():
    return make_domain((1.0, 1.0, 1.0), 8)


@pytest.fixture(scope="session")
def dom15():
    return make_domain((1.0, 1.0, 1.0), 15)


@pytest.fixture(scope="session")
def star15(params, dom15):
    return stationary_solve(params, default_seed(dom15))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_field(dom, rng, amp=1.0):
    return ScalarField(amp * rng.standard_normal(dom.shape), dom)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
