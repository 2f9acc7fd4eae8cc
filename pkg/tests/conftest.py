import numpy as np
import pytest

from imploder.fatou import model_from_cubic
from imploder.lavaurs import find_attracting_fixed_points


@pytest.fixture(scope="session")
def m95():
    return model_from_cubic(0.95)


@pytest.fixture(scope="session")
def m99():
    return model_from_cubic(0.99)


@pytest.fixture(scope="session")
def fps95(m95):
    return find_attracting_fixed_points(m95)


@pytest.fixture(scope="session")
def basin_samples(m95):
    """200 points of the basin of z + z^2 + 0.95 z^3, off the real axis."""
    rng = np.random.default_rng(7)
    z = -0.25 + 0.2 * rng.uniform(-1, 1, 400) + 1j * rng.uniform(0.05, 0.35, 400)
    z = np.where(rng.uniform(size=400) < 0.5, z, np.conj(z))
    return z[:200]
