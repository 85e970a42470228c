import numpy as np
import pytest

from metapn.data import SbmSpec, generate_sbm, sample_kshot_split


def central_diff(fn, x, h=1e-5):
    """Central finite-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        grad[idx] = (fn(xp) - fn(xm)) / (2 * h)
    return grad


def rel_err(approx, exact):
    denom = max(np.abs(exact).max(), 1e-10)
    return np.abs(approx - exact).max() / denom


@pytest.fixture(scope="session")
def sbm_bundle():
    return generate_sbm(SbmSpec(200, 2, 0.2, 0.01, 0.5, 42))


@pytest.fixture(scope="session")
def sbm_split(sbm_bundle):
    return sample_kshot_split(sbm_bundle, 3, 30, 0)
