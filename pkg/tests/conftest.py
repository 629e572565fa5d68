import numpy as np
import pytest

from coopcast import channels
from coopcast.optimize import OptBudget


@pytest.fixture
def fast_budget():
    return OptBudget(lambda_count=17, grid_res=5, restarts=4)


@pytest.fixture
def bsbc_01():
    return channels.bsbc(0.1, 0.1)


@pytest.fixture
def bsbc2_01():
    return channels.bsbc2(0.1)


@pytest.fixture(params=[1, 2, 3])
def random_bc(request):
    return channels.random_channel(np.random.default_rng(request.param))


def uniform_bsc_code(alpha):
    return np.array([0.5, 0.5]), channels.bsc(alpha)
