import math
from functools import lru_cache

import pytest

from relpendulum import ForcingSeries, PendulumParams, find_fixed_points

TWO_PI = 2 * math.pi

GRID_A = (0.05, 0.1, 0.2, 0.24)
GRID_FORCING = {
    "zero": ForcingSeries(),
    "cos": ForcingSeries((0.1,)),
    "cos+sin2": ForcingSeries((0.1, 0.0), (0.0, 0.05)),
}


def grid_params():
    return [PendulumParams(a, TWO_PI, 0, f) for a in GRID_A for f in GRID_FORCING.values()]


@lru_cache(maxsize=None)
def cached_fixed_points(params):
    return find_fixed_points(params)


@pytest.fixture
def free_params():
    with pytest.warns(UserWarning):
        return PendulumParams(0.0, TWO_PI)
