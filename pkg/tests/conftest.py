import numpy as np
import pytest

from tests.helpers import chain


@pytest.fixture
def chain3():
    """Three sites with unequal masses and baths at both ends."""
    return chain(3, masses=[1.0, 1.5, 0.8])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
