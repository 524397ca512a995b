import numpy as np
import pytest

from ctls.model import DesignKind, NoiseKind, PartitionSpec, generate_model, observe


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def make_instance(
    j=0,
    k=0,
    n=3,
    ell=1,
    m=40,
    sigma=0.1,
    model_seed=1,
    noise_seed=2,
    design=DesignKind.IID_ROWS,
    noise=NoiseKind.GAUSS,
):
    """Seeded (model, data) pair used across the estimator tests."""
    partition = PartitionSpec(j=j, k=k, n=n, ell=ell, m=m)
    model = generate_model(partition, sigma, model_seed, design)
    data = observe(model, noise_seed, noise)
    return model, data


def seeded_symmetric(seed: int, dim: int) -> np.ndarray:
    g = np.random.default_rng(seed)
    a = g.standard_normal((dim, dim))
    return 0.5 * (a + a.T)
