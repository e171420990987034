import numpy as np
import pytest

import quadbound as qb


@pytest.fixture(scope="session")
def counterexample():
    """(system, certificate) for the bounded-but-untrappable 3-state system."""
    return qb.builtin_counterexample()


@pytest.fixture(scope="session")
def lorenz():
    return qb.lorenz_system()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240809)
