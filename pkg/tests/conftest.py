import pytest

from mhddamp import GridSpec


@pytest.fixture(scope="session")
def grid8():
    return GridSpec(n_modes=8)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(n_modes=16)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(n_modes=32)
