import numpy as np
import pytest
from hypothesis import settings

from advscen.toy import occluding_bus_scenario, toy_suite

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def suite():
    return toy_suite()


@pytest.fixture(scope="session")
def bus_scene():
    return occluding_bus_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
