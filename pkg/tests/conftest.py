import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trimem import ExperimentSpec
from trimem.report import bundled_spec

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

R_REF = 0.38
ETA_M = 0.23
ETA_READ = 0.68


@pytest.fixture
def ref_spec() -> ExperimentSpec:
    return bundled_spec()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
