"""Shared helpers for the test suite."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_symmetric(rng, d, scale=1.0):
    G = rng.standard_normal((d, d))
    return scale * 0.5 * (G + G.T)


def random_psd(rng, d, scale=1.0):
    G = rng.standard_normal((d, d + 2))
    return scale * (G @ G.T) / (d + 2)


def random_stiefel(rng, d, r):
    Q, R = np.linalg.qr(rng.standard_normal((d, r)))
    return Q * np.sign(np.diag(R))
