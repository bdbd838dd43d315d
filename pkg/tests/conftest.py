import math

import numpy as np
import pytest

from quietzone.geometry import CloakScenario
from quietzone.incident import IncidentSpec
from quietzone.scattering import KiteBoundary
from quietzone.synthesis import solve_devices

LAM0 = 0.125
C0 = 3e8
OMEGA0 = 2 * math.pi * C0 / LAM0


def central_scenario(**changes):
    sc = CloakScenario(alpha=2 * LAM0, delta=10 * LAM0, gamma=20 * LAM0, c0=C0, omega0=OMEGA0,
                       source=IncidentSpec(position=(-20 * LAM0, 0.0), sigma=4 / OMEGA0))
    return sc.with_(**changes) if changes else sc


@pytest.fixture(scope="session")
def scenario():
    return central_scenario()


@pytest.fixture(scope="session")
def solved(scenario):
    return solve_devices(scenario, OMEGA0)


@pytest.fixture(scope="session")
def kite():
    return KiteBoundary(scale=0.5 * LAM0, n_quad=256)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
