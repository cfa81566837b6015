"""Shared builders for random test instances."""

import numpy as np
import pytest

from dib.gaussian_core import GaussianSource
from dib.info_core import ConditionalPmf, DiscreteSource, EncoderSet, Pmf


def random_discrete_source(rng, k=2, x_size=None, y_sizes=None):
    """Random source with strictly positive probabilities."""
    x_size = x_size or int(rng.integers(2, 5))
    y_sizes = y_sizes or [int(rng.integers(2, 5)) for _ in range(k)]
    px = Pmf(rng.dirichlet(np.ones(x_size) * 2.0))
    channels = tuple(
        ConditionalPmf(rng.dirichlet(np.ones(m) * 2.0, size=x_size))
        for m in y_sizes
    )
    return DiscreteSource(px, channels)


def random_encoders(rng, source, u_sizes=None):
    u_sizes = u_sizes or source.y_sizes
    return EncoderSet(tuple(
        ConditionalPmf(rng.dirichlet(np.ones(u), size=source.y_sizes[k]))
        for k, u in enumerate(u_sizes)
    ))


def random_gaussian_source(rng, k=2, n=None, m_max=3, complex_mode=False):
    """Random well-conditioned vector-Gaussian source."""
    n = n or int(rng.integers(1, 5))

    def spd(d):
        a = rng.normal(size=(d, d))
        if complex_mode:
            a = a + 1j * rng.normal(size=(d, d))
        return a @ a.conj().T + d * np.eye(d)

    h, sigma_n = [], []
    for _ in range(k):
        m = int(rng.integers(1, m_max + 1))
        hk = rng.normal(size=(m, n))
        if complex_mode:
            hk = hk + 1j * rng.normal(size=(m, n))
        h.append(hk)
        sigma_n.append(spd(m))
    return GaussianSource(spd(n), tuple(h), tuple(sigma_n),
                          complex_mode=complex_mode)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
