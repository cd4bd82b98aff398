import numpy as np
import pytest

from oam_eraser.field_oracle import GridParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def coarse_grid():
    return GridParams(N=256)

