import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from thermolength.catalog import (
    ClassicalRelaxationParams,
    DampedOscillatorParams,
    WeakCouplingWarning,
    classical_relaxation_model,
    damped_oscillator_model,
    displacement_model,
)

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GAMMA0 = 0.1
OMEGA_GRID = (0.5, 0.875, 1.25, 1.625, 2.0)
BETA_GRID = (1.0, 5.0, 10.0, 15.0, 20.0)


def oscillator(beta=20.0, gamma0=GAMMA0, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WeakCouplingWarning)
        return damped_oscillator_model(DampedOscillatorParams(gamma0=gamma0, beta=beta, **kw))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def osc20():
    return oscillator(20.0)


@pytest.fixture
def relaxation():
    return classical_relaxation_model(ClassicalRelaxationParams(tau_eq=1.0, beta=1.0))


@pytest.fixture
def displacement():
    return displacement_model()


def random_spd(rng, n, scale=1.0):
    A = rng.normal(size=(n, n))
    return scale * (A @ A.T + n * np.eye(n))
