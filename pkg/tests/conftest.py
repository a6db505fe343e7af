"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def random_simplex(rng: np.random.Generator, s: int) -> np.ndarray:
    """A strictly positive random probability vector of length s."""
    v = rng.dirichlet(np.ones(s))
    # Guard against exact zeros from underflow; renormalize the perturbation.
    v = v + 1e-12
    return v / v.sum()


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20260814)
