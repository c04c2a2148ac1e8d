import numpy as np
import pytest

from qtlp.spectral import DyadicLadder, Grid


@pytest.fixture(scope="session")
def grid32():
    return Grid(32)


@pytest.fixture(scope="session")
def ladder32(grid32):
    return DyadicLadder(grid32)


@pytest.fixture(scope="session")
def grid64():
    return Grid(64)


@pytest.fixture(scope="session")
def ladder64(grid64):
    return DyadicLadder(grid64)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
