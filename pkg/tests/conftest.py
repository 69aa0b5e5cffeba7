import numpy as np
import pytest

from sparseselect.data import Dataset, standardize
from sparseselect.experiments import DesignSpec, gen_design


@pytest.fixture
def rng():
    return np.random.default_rng(20210521)


def make_dataset(rng, n, m, rho=0.0, beta=None, noise=1.0, kind="real"):
    """Standardized dataset with a linear + two-point-noise response."""
    design = DesignSpec(kind="equicorrelated", rho=rho)
    x = gen_design(n, m, design, 3.0, rng)
    if beta is None:
        beta = np.zeros(m)
    w = (rng.integers(0, 2, size=n) * 2.0 - 1.0) * noise
    y = x @ beta + w
    return Dataset(x=x, y=y, kind=kind)


def make_binary_dataset(rng, n, m, beta=None, rho=0.0):
    """Standardized dataset with a Bernoulli(logistic) response."""
    design = DesignSpec(kind="equicorrelated", rho=rho)
    x = gen_design(n, m, design, 3.0, rng)
    if beta is None:
        beta = np.zeros(m)
    lin = x @ beta
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-lin))).astype(float)
    return Dataset(x=x, y=y, kind="binary")


def standardize_raw(rng, n, m):
    raw = rng.normal(size=(n, m)) * rng.uniform(0.5, 3.0, size=m) + rng.normal(size=m)
    return standardize(raw, np.zeros(n), "real")
