import os

import pytest
from hypothesis import HealthCheck, settings

from holoquad.geometry import AffineSections

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


TREE_B = AffineSections((0, -1, 0, 1), (0, -1, -1, -2))
TREE_C = AffineSections((-1, 0, 1, 0), (-1, -1, -2, 0))
PARALLELOGRAM = AffineSections((0, 1, 0, 1), (0, 0, 1, 1))
SHEARED = AffineSections((0, 2, 1, 3), (0, 0, 1, 1))
# parallelogram with the tie on the other axis, p2 = p4
PARALLELOGRAM_24 = AffineSections((1, 0, 1, 0), (-1, 0, 0, -1))


@pytest.fixture
def tree_b():
    return TREE_B


@pytest.fixture
def tree_c():
    return TREE_C


@pytest.fixture
def parallelogram():
    return PARALLELOGRAM


@pytest.fixture
def sheared():
    return SHEARED


@pytest.fixture
def parallelogram_24():
    return PARALLELOGRAM_24
