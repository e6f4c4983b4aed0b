import numpy as np
import pytest

from cbSpMV.utils.io import IOUtils
from matrices import oracle_corpus


@pytest.fixture(autouse=True)
def quiet_io():
    IOUtils.verbose = False
    yield
    IOUtils.verbose = False


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corpus():
    return oracle_corpus()
