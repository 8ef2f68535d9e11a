import numpy as np
import pytest

from osstab.grid import make_grid
from osstab.profiles import make_profile


@pytest.fixture(scope="session")
def tanh_profile():
    return make_profile("tanh", [1.0])


@pytest.fixture(scope="session")
def exp_profile():
    return make_profile("exp", [1.0])


@pytest.fixture(scope="session")
def grid160():
    return make_grid(160, 4.0)


@pytest.fixture(scope="session")
def grid192():
    return make_grid(192, 4.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)
