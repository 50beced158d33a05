import numpy as np
import pytest

from decaylab.grid import GridSpec
from decaylab.initial_data import RadialProfile, make_slow_decay_field, sample_to_grid


@pytest.fixture(scope="session")
def small_spec():
    return GridSpec(half_width=16.0, resolution=32)


@pytest.fixture(scope="session")
def small_field(small_spec):
    return sample_to_grid(make_slow_decay_field(RadialProfile(alpha=2.0)),
                          small_spec)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
