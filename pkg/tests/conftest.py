import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

TWO_PI_KHZ = 2e3 * math.pi


@pytest.fixture
def omega():
    return 32 * TWO_PI_KHZ


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
