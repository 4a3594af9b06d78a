import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wvag.model import WvagParams
from wvag.simulate import RngStream, simulate_study

#: parameter set of the synthetic studies (moderately skewed, correlated)
STUDY_TRUTH = WvagParams(a=1.0, alpha=[0.8, 0.6], mu=[0.1, -0.3],
                         sigma=[[1.0, 0.6], [0.6, 1.2]], m=[-0.1, 0.3])


@pytest.fixture(scope="session")
def truth():
    return STUDY_TRUTH


@pytest.fixture(scope="session")
def sample_c1(truth):
    """One N=1000 sample at c=1."""
    return simulate_study(truth, 1.0, 1000, 1, RngStream(2024))[0]


@pytest.fixture(scope="session")
def sample_c01(truth):
    """One N=1000 sample at c=0.1 (non-invertible regime)."""
    return simulate_study(truth, 0.1, 1000, 1, RngStream(2024))[0]


@pytest.fixture(scope="session")
def big_draws_c1(truth):
    """10^6 draws of Y(1) shared by the Monte-Carlo oracles."""
    rng = RngStream(555).generator()
    from wvag.simulate import wvag_increment

    return wvag_increment(truth, 1.0, rng, size=10**6)


def params_vector(p: WvagParams) -> np.ndarray:
    return np.array([p.a, p.alpha[0], p.alpha[1], p.mu[0], p.mu[1],
                     p.sigma[0, 0], p.sigma[1, 1], p.sigma[0, 1], p.m[0], p.m[1]])
