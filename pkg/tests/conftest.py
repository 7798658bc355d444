import math

import pytest
from hypothesis import HealthCheck, settings

from revflow import HalfSurface, ProfileFunction, build_surface

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def sphere_surface():
    return build_surface(ProfileFunction.zero())


@pytest.fixture(scope="session")
def bump_surface():
    return build_surface(ProfileFunction.bump(0.5, 1.0, 0.1))


@pytest.fixture(scope="session")
def odd_surface():
    return build_surface(ProfileFunction.odd_bump(0.25, 0.45, 0.1))


@pytest.fixture(scope="session")
def families(sphere_surface, bump_surface, odd_surface):
    return {"zero": sphere_surface, "bump": bump_surface, "odd_bump": odd_surface}


@pytest.fixture(scope="session")
def bump_half(bump_surface):
    return HalfSurface(bump_surface)


@pytest.fixture(scope="session")
def sphere_half(sphere_surface):
    return HalfSurface(sphere_surface)
