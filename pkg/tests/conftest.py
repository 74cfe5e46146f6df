import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chargelattice import lattice as lat

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_lattice(rng, d, max_condition=50.0):
    """Random generator with bounded condition number, rescaled to unit covolume."""
    while True:
        a = rng.normal(size=(d, d)) + 2.0 * np.eye(d)
        if np.linalg.cond(a) <= max_condition:
            return lat.normalize_density(lat.from_generator(a))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def triangle():
    return lat.triangular("obtuse")
