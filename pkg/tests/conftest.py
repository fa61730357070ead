import numpy as np
import pytest

from grflab.mesh import make_grid


@pytest.fixture(scope="session")
def grid16():
    return make_grid((16, 16, 16), (1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def x1(grid16):
    return grid16.coords[0]


def packed_identity(shape):
    g = np.zeros((6,) + shape)
    g[0] = g[3] = g[5] = 1.0
    return g
