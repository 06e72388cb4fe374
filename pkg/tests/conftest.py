import numpy as np
import pytest

import tvckit as tk

# pass/fail lines queued by the acceptance tests, echoed after the run so
# they survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


# the fixed constant set used throughout the worked examples
PROBS = (0.5, 0.5)
ALPHA = (1.0, 2.0)
BETA = (0.5, 0.4)
GAMMA = (0.25, 0.2)
DISCOUNT = 0.9
N_HOUSEHOLD = 2


@pytest.fixture(scope="session")
def space():
    return tk.SampleSpace(PROBS)


@pytest.fixture(scope="session")
def params():
    return tk.QuadLinParams(alpha=ALPHA, beta=BETA, gamma=GAMMA)


@pytest.fixture(scope="session")
def quadlin_d(params):
    return tk.quadlin_discrete(params)


@pytest.fixture(scope="session")
def quadlin_c(params):
    return tk.quadlin_continuous(params)


@pytest.fixture(scope="session")
def household():
    return tk.household_log(DISCOUNT, N_HOUSEHOLD)


@pytest.fixture
def dom50():
    return tk.TimeDomain.discrete(50)


@pytest.fixture
def euler_path_50(dom50, space, params):
    return tk.quadlin_euler_path(dom50, space, params)


def random_path(domain, space, rng, lo=-1.0, hi=3.0, dim=1):
    vals = rng.uniform(lo, hi, size=(domain.num_points, space.m, dim))
    return tk.StochasticPath(domain, space, vals)
