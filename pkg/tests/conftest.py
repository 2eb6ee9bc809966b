import pytest

from bony.skew import build_system

BASE_M, BASE_D, BASE_EPS, BASE_R0 = 12, 1, 0.05, 0.05


@pytest.fixture(scope="session")
def baseline():
    return build_system(BASE_M, BASE_D, BASE_EPS, BASE_R0)


@pytest.fixture(scope="session")
def baseline_d2():
    return build_system(13, 2, 0.05, 0.05)
