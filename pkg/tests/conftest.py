import numpy as np
import pytest
from hypothesis import strategies as st

from chaosbench.kernel import random_kernel

SHAPES = [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3)]


@st.composite
def kernels(draw, shapes=SHAPES, n_values=(1, 2, 3)):
    p, q = draw(st.sampled_from(shapes))
    n = draw(st.sampled_from(n_values))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_kernel(p, q, n, seed=seed)


def mc_close(samples, expected, k=4.0):
    """Mean of complex samples within k standard errors (per real component)."""
    samples = np.asarray(samples)
    m = samples.mean()
    se_re = samples.real.std() / np.sqrt(samples.size)
    se_im = samples.imag.std() / np.sqrt(samples.size) if np.iscomplexobj(samples) else 0.0
    ok_re = abs(m.real - np.real(expected)) <= k * se_re + 1e-12
    ok_im = abs(np.imag(m) - np.imag(expected)) <= k * se_im + 1e-12
    return bool(ok_re and ok_im)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
