import numpy as np
import pytest

from meanfield_lab.grid import make_grid
from meanfield_lab.initial import gaussian
from meanfield_lab.potentials import PotentialSpec, sample_potential


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid8():
    return make_grid(1, 8, 10.0)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(1, 16, 10.0)


@pytest.fixture(scope="session")
def yukawa8(grid8):
    return sample_potential(PotentialSpec("yukawa", 0.5, 1.0), grid8)


@pytest.fixture(scope="session")
def yukawa16(grid16):
    return sample_potential(PotentialSpec("yukawa", 0.5, 1.0), grid16)


@pytest.fixture(scope="session")
def packet16(grid16):
    return gaussian(grid16, width=1.0, momentum=1.0)


@pytest.fixture(scope="session")
def packet8(grid8):
    return gaussian(grid8, width=1.0, momentum=1.0)
