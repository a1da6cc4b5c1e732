import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from atsltd import EventArray, SensorGeometry

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_stream(rng: np.random.Generator, n: int, geometry: SensorGeometry, t0: int = 0,
                  max_gap_us: int = 500, tie_prob: float = 0.1) -> EventArray:
    """Non-decreasing timestamps with some exact ties, uniform pixels and polarities."""
    gaps = rng.integers(1, max_gap_us, n)
    gaps[rng.random(n) < tie_prob] = 0
    t = t0 + np.cumsum(gaps)
    return EventArray(t, rng.integers(0, geometry.w, n), rng.integers(0, geometry.h, n), rng.integers(0, 2, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
