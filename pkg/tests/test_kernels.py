"""Numba kernels against their pure-numpy twins."""

import numpy as np
import pytest

from qcontour import _kernels as K
from qcontour._backend import NUMBA_AVAILABLE

pytestmark = pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba backend disabled")


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(99)
    n, m = 5, 200
    a = 0.2 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    z = 2.0 * np.exp(2j * np.pi * rng.uniform(size=m))
    w = rng.normal(size=m) + 1j * rng.normal(size=m)
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return a, z, w, psi, rng


def test_cheb_eval_twins_agree(data):
    _, _, _, _, rng = data
    coeffs = rng.normal(size=160)
    x = rng.uniform(-1, 1, 5000)
    a = K.cheb_eval_numpy(coeffs, x)
    b = K.cheb_eval_numba(coeffs, x)
    np.testing.assert_allclose(a, b, atol=1e-11)


def test_riemann_twins_agree(data):
    a, z, w, psi, _ = data
    np.testing.assert_allclose(
        K.riemann_matrix_numpy(a, z, w), K.riemann_matrix_numba(a, z, w), atol=1e-11
    )
    np.testing.assert_allclose(
        K.riemann_vector_numpy(a, z, w, psi),
        K.riemann_vector_numba(a, z, w, psi),
        atol=1e-11,
    )


def test_sampler_exact_twins_agree(data):
    _, _, _, _, rng = data
    nodes, dim, shots = 37, 4, 4000
    beta = (rng.normal(size=(nodes, dim)) + 1j * rng.normal(size=(nodes, dim))) / 4
    evals = rng.normal(size=dim)
    k1 = rng.integers(0, nodes, shots)
    k2 = rng.integers(0, nodes, shots)
    np.testing.assert_allclose(
        K.sampler_mu_exact_numpy(beta, evals, k1, k2),
        K.sampler_mu_exact_numba(beta, evals, k1, k2),
        atol=1e-13,
    )


def test_sampler_shots_twins_identical_draws(data):
    # the Born inversion consumes identical uniforms in identical order:
    # the two backends must produce the same outcome sequence exactly
    _, _, _, _, rng = data
    nodes, dim, shots = 19, 3, 20000
    beta = (rng.normal(size=(nodes, dim)) + 1j * rng.normal(size=(nodes, dim))) / 4
    nrm = np.sqrt(np.max(np.sum(np.abs(beta) ** 2, axis=1)))
    beta = beta / max(nrm, 1.0)
    evals = rng.normal(size=dim)
    k1 = rng.integers(0, nodes, shots)
    k2 = rng.integers(0, nodes, shots)
    u = rng.uniform(0, 1, shots)
    a = K.sampler_mu_shots_numpy(beta, evals, k1, k2, u)
    b = K.sampler_mu_shots_numba(beta, evals, k1, k2, u)
    np.testing.assert_array_equal(a, b)


def test_backend_dispatch_consistent():
    from qcontour import _backend

    assert _backend.BACKEND in ("numba", "numpy")
    assert (K.cheb_eval is K.cheb_eval_numba) == (_backend.BACKEND == "numba")
