import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ministokes.benchmarks import problem
from ministokes.mesh import UNIT_SQUARE, generate_mesh

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def cached_mesh(h0, domain=UNIT_SQUARE, seed=None):
    return generate_mesh(domain, h0, seed=seed)


@pytest.fixture(scope="session")
def coarse_mesh():
    return cached_mesh(0.2)


@pytest.fixture(scope="session")
def mesh01():
    return cached_mesh(0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_triangle(rng, scale=1.0):
    """A positively oriented, not too flat triangle."""
    while True:
        c = rng.uniform(-1, 1, size=(3, 2)) * scale
        a = 0.5 * ((c[1, 0] - c[0, 0]) * (c[2, 1] - c[0, 1]) - (c[2, 0] - c[0, 0]) * (c[1, 1] - c[0, 1]))
        if abs(a) > 0.05 * scale * scale:
            return c if a > 0 else c[[0, 2, 1]]


def unit_square_problem(pid):
    return problem(pid)
