"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from memefuse.dataset import default_vocabulary


@pytest.fixture(scope="session")
def vocab():
    return default_vocabulary()


@pytest.fixture
def rng():
    return np.random.default_rng(20210605)
