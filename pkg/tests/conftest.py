from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from llr_lab.rng import SeedSpec

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# root seed shared by the unit tests; chosen once, never tuned
TEST_SEED = 20260101


@pytest.fixture
def seed():
    return SeedSpec(TEST_SEED)
