import numpy as np
import pytest

from glrom.grid import build_coarse_grid, build_fine_mesh


@pytest.fixture(scope="session")
def mesh10():
    return build_fine_mesh(10, 10)


@pytest.fixture(scope="session")
def mesh20():
    return build_fine_mesh(20, 20)


@pytest.fixture(scope="session")
def grid20_4(mesh20):
    return build_coarse_grid(mesh20, 4, 4)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260814)
