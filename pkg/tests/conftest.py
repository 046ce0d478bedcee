import numpy as np
import pytest

from vtolctl.airframe import eflite_like


@pytest.fixture
def params():
    return eflite_like()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
