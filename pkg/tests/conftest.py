import numpy as np
import pytest

from convexbp import Disc, Ellipse, Superellipse, figure_phantom
from convexbp.forward import circular_means, wave_from_means
from convexbp.phantoms import Bump, Phantom


@pytest.fixture(scope="session")
def disc():
    return Disc((0.0, 0.0), 1.0)


@pytest.fixture(scope="session")
def ellipse():
    return Ellipse((0.0, 0.0), (1.0, 0.8))


@pytest.fixture(scope="session")
def superellipse():
    return Superellipse((0.0, 0.0), (1.0, 0.8), 4.0)


@pytest.fixture(scope="session")
def disc_phantom():
    return Phantom([Bump((0.2, -0.15), 0.35, 1.0), Bump((-0.35, 0.3), 0.25, 0.6)])


@pytest.fixture(scope="session")
def super_phantom():
    return Phantom([Bump((-0.3, 0.15), 0.3, 1.0), Bump((0.35, -0.2), 0.25, 0.8)])


@pytest.fixture(scope="session")
def small_disc_data(disc, disc_phantom):
    """Coarse but accurate data for quick inversion tests."""
    d = Disc((0.0, 0.0), 1.0, n_nodes=128)
    m = circular_means(disc_phantom, d, n_r=512, n_ang=256)
    w = wave_from_means(m, n_t=1024)
    return d, m, w


@pytest.fixture(scope="session")
def ellipse_data(ellipse):
    ph = figure_phantom()
    m = circular_means(ph, ellipse)
    return ph, m, wave_from_means(m)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
