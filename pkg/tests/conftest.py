import numpy as np
import pytest

from mapcones.seq import canonical


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def id_t_m2():
    return canonical("decomposable", 2)


@pytest.fixture
def id_only_m2():
    return canonical("cp", 2)


@pytest.fixture
def t_only_m2():
    return canonical("ccp", 2)
