import numpy as np
import pytest

from meshcs.imgio import GrayImage


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_image(rng):
    return GrayImage(rng.integers(0, 256, size=(16, 16)).astype(float))
