import numpy as np
import pytest

from covertpath.model import ScalarDistribution, SubsetFamily


@pytest.fixture
def fig2_innocent():
    """Two-link toy system: p(00)=0, p(01)=1/2, p(10)=1/4, p(11)=1/4."""
    return ScalarDistribution([0.0, 0.5, 0.25, 0.25])


@pytest.fixture
def fig2_family():
    return SubsetFamily(((1,), (2,)), 2)


@pytest.fixture
def fig2_optimizer():
    return ScalarDistribution([0.125, 0.375, 0.125, 0.375])


@pytest.fixture
def remark1_innocent():
    """Three links, mass 1/2 on 000 and 1/2 on 111."""
    probs = np.zeros(8)
    probs[0] = probs[7] = 0.5
    return ScalarDistribution(probs)


@pytest.fixture
def remark1_family():
    return SubsetFamily(((1, 2), (1, 3), (2, 3)), 3)


def random_distribution(rng, size, zeros=0):
    """Random point of the simplex, optionally with forced zero entries."""
    raw = rng.gamma(1.0, 1.0, size)
    if zeros:
        idx = rng.choice(size, size=zeros, replace=False)
        raw[idx] = 0.0
        if raw.sum() == 0:
            raw[(idx[0] + 1) % size] = 1.0
    return ScalarDistribution(raw / raw.sum())
