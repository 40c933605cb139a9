import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unitary(rng):
    q, r = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(rng, cond):
    """Random 2x2 operator with largest singular value 1 and condition number ``cond``."""
    return random_unitary(rng) @ np.diag([1.0, 1.0 / cond]) @ random_unitary(rng)
