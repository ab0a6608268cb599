import math

import numpy as np
import pytest

from modnuc.scattering import ScatteringFunction

MODELS = [
    ScatteringFunction.free_bose(),
    ScatteringFunction.free_fermi(),
    ScatteringFunction.sinh(math.pi / 4),
]


@pytest.fixture(params=MODELS, ids=lambda S: S.name.split(":")[0])
def model(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
