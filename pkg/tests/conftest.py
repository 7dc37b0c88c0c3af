import numpy as np
import pytest

from kgrs.grid import Grid
from kgrs.grs import FamilySpec, build_family
from kgrs.krein import PARITY, certify


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture(scope="session")
def shifted15(grid):
    return certify(build_family(FamilySpec.shifted(0.5, 15, grid)))


@pytest.fixture(scope="session")
def shifted12(grid):
    return certify(build_family(FamilySpec.shifted(0.5, 12, grid)))


@pytest.fixture(scope="session")
def example1_40(grid):
    return build_family(FamilySpec.gaussian(40, grid))


@pytest.fixture(scope="session")
def anharmonic12(grid):
    return certify(build_family(FamilySpec.anharmonic(4.0, 12, grid)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
