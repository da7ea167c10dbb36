import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kdvlab.grid import SpatialGrid
from kdvlab.kdv import A_EXACT, kdv_soliton

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def A():
    return A_EXACT


@pytest.fixture(scope="session")
def grid512():
    return SpatialGrid(512, 40.0)


@pytest.fixture(scope="session")
def grid256():
    return SpatialGrid(256, 40.0)


@pytest.fixture(scope="session")
def soliton512(grid512):
    return kdv_soliton(grid512, A_EXACT, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
