import numpy as np
import pytest

from dpbo import HyperparamGrid, KernelParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def se_params():
    return KernelParams("se", 0.5)


@pytest.fixture
def small_grid():
    return HyperparamGrid.from_points(np.linspace(0.0, 1.0, 6)[:, None])


@pytest.fixture
def grid_2d(rng):
    return HyperparamGrid.from_points(rng.uniform(0.0, 1.0, size=(10, 2)))
