import numpy as np
import pytest

from qsslab.nonces import builtin_nonce_set


@pytest.fixture(scope="session")
def hsu_set():
    return builtin_nonce_set("hsu-I")


@pytest.fixture(scope="session")
def proposed_set():
    return builtin_nonce_set("proposed-J")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
