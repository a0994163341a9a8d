import numpy as np
import pytest

from cpsa.scenario import LargeScaleProfile, SystemParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_params(**kw):
    base = dict(M=2, K=1, N=0, tau_p=1, P_U=1.0, P_A=1.0, P_B=1.0, sigma2=1.0)
    base.update(kw)
    return SystemParams(**base)


def random_profile(rng, K, N, spread=1.0):
    """Well-scaled random large-scale gains (users around 1, attackers around 0.5)."""
    bu = np.exp(spread * rng.standard_normal(K))
    ba = 0.5 * np.exp(spread * rng.standard_normal(N))
    return LargeScaleProfile(bu, ba)
