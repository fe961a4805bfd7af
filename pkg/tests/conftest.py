import math

import numpy as np
import pytest

from dyntomo.operators import SIGMA_X, SIGMA_Y, SIGMA_Z

RHO0 = np.array([[0.6, 0.1 - 0.2j], [0.1 + 0.2j, 0.4]])
LN2 = math.log(2)


@pytest.fixture
def rho0():
    return RHO0.copy()


@pytest.fixture
def paulis():
    return np.eye(2, dtype=complex), SIGMA_X, SIGMA_Y, SIGMA_Z


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
