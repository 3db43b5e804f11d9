"""Shared fixtures: the expensive grid collection is built once per session."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from caffeine import certify, harness

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

MASTER_SEED = 100


@pytest.fixture(scope="session")
def clf_spec():
    return certify.default_clf_spec()


@pytest.fixture(scope="session")
def collection(clf_spec):
    """Full 226-trajectory grid collection at the default configuration."""
    return harness.collect_grid_data(clf_spec, MASTER_SEED)


@pytest.fixture(scope="session")
def warm_arrays(collection):
    return harness.warm_start_arrays(collection)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
