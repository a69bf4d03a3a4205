import warnings

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _quiet_near_field():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=UserWarning)
        yield
