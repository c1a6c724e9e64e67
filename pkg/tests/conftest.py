import numpy as np
import pytest

from weakiv.model import ModelConfig, build_blocks


def random_sigma(k, seed, spread=0.5):
    """Well-conditioned random SPD covariance for a 2k-dim reduced form."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((2 * k, 2 * k))
    sigma = a @ a.T / (2 * k) + spread * np.eye(2 * k)
    return 0.5 * (sigma + sigma.T)


def random_model(k, seed, beta0=None):
    rng = np.random.default_rng(seed + 1)
    if beta0 is None:
        beta0 = float(rng.uniform(-1.5, 1.5))
    config = ModelConfig(k=k, beta0=beta0, sigma=random_sigma(k, seed))
    return config, build_blocks(config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
