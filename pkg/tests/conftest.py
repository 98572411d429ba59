import pytest

from nlw_morawetz.radial_grid import make_grid


@pytest.fixture(scope="session")
def grid3():
    return make_grid(3, 0.02, 40.0)


@pytest.fixture(scope="session")
def coarse3():
    return make_grid(3, 0.05, 30.0)
