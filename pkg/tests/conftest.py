import numpy as np
import pytest

from foodchain.model import ParameterSet
from foodchain.scenarios import CYCLE_GAS_SET, M2_EXPERIMENT_BASE

#: Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def base():
    return M2_EXPERIMENT_BASE


@pytest.fixture
def cycle_set():
    return CYCLE_GAS_SET


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_params(rng, **fixed) -> ParameterSet:
    vals = {
        "a1": rng.uniform(0.05, 2.0),
        "a2": rng.uniform(0.05, 2.0),
        "d1": rng.uniform(0.02, 1.0),
        "d2": rng.uniform(0.005, 0.5),
        "m1": rng.uniform(0.05, 4.0),
        "m2": rng.uniform(0.005, 1.0),
    }
    vals.update(fixed)
    return ParameterSet(**vals)
