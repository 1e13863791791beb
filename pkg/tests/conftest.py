import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from persistent_monitoring.scenario import load_scenario

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SCENARIOS = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")


@pytest.fixture
def scenario_dir():
    return os.path.abspath(SCENARIOS)


@pytest.fixture
def e1():
    """One point, coverage {[0.2, 0.3], [0.6, 0.7]}, p = 1, c = 6, four cells."""
    return load_scenario(os.path.join(SCENARIOS, "e1.json")).covered


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
