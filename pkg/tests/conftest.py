import hypothesis
import numpy as np
import pytest

from karcher.manifolds import EuclideanSpace, HyperbolicSpace, Sphere

hypothesis.settings.register_profile(
    "numerics", max_examples=25, deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("numerics")


@pytest.fixture(scope="session")
def sphere():
    return Sphere(2)


@pytest.fixture(scope="session")
def hyperbolic():
    return HyperbolicSpace(2, curvature=1.0)


@pytest.fixture(scope="session")
def euclidean3():
    return EuclideanSpace(3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_sphere_point(man, rng):
    v = rng.normal(size=man.coord_dim)
    return man.point(man.radius * v / np.linalg.norm(v))


def random_hyperbolic_point(man, rng, spread=0.5):
    x = rng.normal(size=man.dim) * spread
    last = np.sqrt(man.radius ** 2 + float(x @ x))
    return man.point(np.concatenate([x, [last]]))


def random_unit_tangent(man, p, rng):
    basis = man.tangent_basis(p)
    coeffs = rng.normal(size=len(basis))
    v = basis[0] * coeffs[0]
    for b, c in zip(basis[1:], coeffs[1:]):
        v = v + b * c
    return v * (1.0 / man.norm(v))
