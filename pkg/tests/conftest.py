import numpy as np
import pytest

from aggdiff import ParticleState, PiecewiseDensity, TorusDomain


@pytest.fixture
def t1():
    return TorusDomain(1.0)


@pytest.fixture
def uniform_density(t1):
    return PiecewiseDensity(t1, np.array([-0.5]), np.array([1.0]))


@pytest.fixture
def state3(t1):
    # the worked three-particle example: gaps 1/4, 1/2, 1/4
    return ParticleState(t1, 1.0, np.array([-0.5, -0.25, 0.25]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, n=None, domain=None, mass=None) -> ParticleState:
    domain = domain or TorusDomain(1.0)
    n = n or int(rng.integers(4, 64))
    while True:
        x = np.sort(rng.uniform(domain.base, domain.base + domain.length, n))
        if x[-1] - x[0] < domain.length and np.all(np.diff(x) > 1e-9):
            break
    return ParticleState(domain, mass or float(rng.uniform(0.1, 1.0)), x)
