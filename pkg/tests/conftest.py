"""Shared fixtures and synthetic-channel helpers for the test suite."""

import numpy as np
import pytest

from cfsim.channel import ChannelRealization


def synthetic_channel(rng, m, k, eps=0.0, scale=1.0):
    """Unit-variance i.i.d. Rayleigh channel with an optional CSI split.

    The estimate carries a (1 - eps) share of the variance and the error an
    eps share, mirroring the simulator's own split but with beta = scale^2
    for every pair (no geometry).
    """
    def cn(var):
        if var == 0.0:
            return np.zeros((m, k), dtype=complex)
        return np.sqrt(var / 2.0) * (rng.standard_normal((m, k))
                                     + 1j * rng.standard_normal((m, k)))

    g_hat = scale * cn(1.0 - eps)
    g_err = scale * cn(eps)
    beta = np.full((m, k), scale ** 2)
    return ChannelRealization(beta=beta, g_true=g_hat + g_err,
                              g_hat=g_hat, g_err=g_err)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
