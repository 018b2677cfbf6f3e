import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from emshape.sphere import default_grid

settings.register_profile("emshape", max_examples=15, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("emshape")


@pytest.fixture(scope="session")
def grid6():
    return default_grid(6)


@pytest.fixture(scope="session")
def grid8():
    return default_grid(8)


@pytest.fixture(scope="session")
def grid10():
    return default_grid(10)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
