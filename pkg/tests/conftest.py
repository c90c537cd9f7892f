import numpy as np
import pytest

from mimo_sim.constants import SPEED_OF_LIGHT
from mimo_sim.em_coupling import CouplingParams

WAVELENGTH = SPEED_OF_LIGHT / 2.5e9


@pytest.fixture(scope="session")
def lam():
    return WAVELENGTH


@pytest.fixture(scope="session")
def coupling(lam):
    return CouplingParams(wavelength_lambda=lam)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260811)
