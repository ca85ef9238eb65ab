"""
Shared fixtures for the test suite
"""

import numpy as np
import pytest

from src.core.channels import builtin_channel, choi_matrix
from src.solvers.ipm import clear_subspace_cache


@pytest.fixture
def identity_choi():
    return choi_matrix(builtin_channel('identity'))


@pytest.fixture
def depolarizing_choi():
    return choi_matrix(builtin_channel('depolarizing', 0.25))


@pytest.fixture
def damping_choi():
    return choi_matrix(builtin_channel('amplitude_damping', 0.3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _fresh_subspace_cache():
    clear_subspace_cache()
    yield
    clear_subspace_cache()
