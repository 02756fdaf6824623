"""Hot numeric kernels, each in a numba build and a pure-numpy twin.

The public names (``cheb_eval``, ``riemann_matrix``, ``riemann_vector``,
``sampler_mu_exact``, ``sampler_mu_shots``) dispatch on the backend chosen
in :mod:`qcontour._backend`.  Both twins consume identical inputs in
identical order, so results are reproducible per backend; across backends
they agree to roundoff.  Summation order inside a kernel is sequential in
the node/shot index; do not "optimize" it into a pairwise reduction, the
CLI determinism contract depends on a fixed order.
"""

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from ._backend import USE_NUMBA

__all__ = [
    "cheb_eval",
    "riemann_matrix",
    "riemann_vector",
    "sampler_mu_exact",
    "sampler_mu_shots",
]


# -- pure-numpy twins ------------------------------------------------------

def cheb_eval_numpy(coeffs, x):
    """Evaluate a Chebyshev series (full coefficient array) at points x."""
    return _cheb.chebval(np.asarray(x, dtype=np.float64), coeffs)


def riemann_matrix_numpy(a, z, w):
    """sum_k w_k (z_k I - A)^{-1} via batched LU solves."""
    n = a.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    shifted = z[:, None, None] * eye[None, :, :] - a[None, :, :]
    inv = np.linalg.solve(shifted, np.broadcast_to(eye, shifted.shape))
    acc = np.zeros((n, n), dtype=np.complex128)
    for k in range(z.shape[0]):  # fixed order, matches the numba twin
        acc += w[k] * inv[k]
    return acc


def riemann_vector_numpy(a, z, w, psi):
    n = a.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    shifted = z[:, None, None] * eye[None, :, :] - a[None, :, :]
    sol = np.linalg.solve(shifted, np.broadcast_to(psi[:, None], (z.shape[0], n, 1)))
    acc = np.zeros(n, dtype=np.complex128)
    for k in range(z.shape[0]):
        acc += w[k] * sol[k, :, 0]
    return acc


def sampler_mu_exact_numpy(beta, evals, k1, k2):
    """mu_j = Re <w_{k2}| O |w_{k1}> in the observable eigenbasis.

    beta[k, i] = <v_i | g_k psi>; evals are the observable eigenvalues.
    """
    b1 = beta[k1]
    b2 = beta[k2]
    return np.real(np.sum(np.conj(b2) * evals[None, :] * b1, axis=1))


def sampler_mu_shots_numpy(beta, evals, k1, k2, u):
    """One Born-rule draw of the (swap x projected-observable) outcome per shot.

    Outcome ladder per shot: +evals[0..n-1], -evals[0..n-1], then 0; the
    uniform u[j] is inverted against the cumulative probabilities in that
    fixed order (identical to the numba twin).
    """
    plus = 0.5 * (beta[k2] + beta[k1])
    minus = 0.5 * (beta[k2] - beta[k1])
    pp = plus.real**2 + plus.imag**2
    pm = minus.real**2 + minus.imag**2
    probs = np.concatenate([pp, pm], axis=1)
    cum = np.cumsum(probs, axis=1)
    t = u.shape[0]
    idx = np.empty(t, dtype=np.int64)
    for j in range(t):
        idx[j] = np.searchsorted(cum[j], u[j], side="right")
    n = evals.shape[0]
    outcomes = np.concatenate([evals, -evals, [0.0]])
    return outcomes[np.minimum(idx, 2 * n)]


# -- numba builds ----------------------------------------------------------

if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def cheb_eval_numba(coeffs, x):
        out = np.empty(x.shape[0], dtype=np.float64)
        d = coeffs.shape[0] - 1
        for i in range(x.shape[0]):
            b1 = 0.0
            b2 = 0.0
            xi = x[i]
            for j in range(d, 0, -1):
                b1, b2 = coeffs[j] + 2.0 * xi * b1 - b2, b1
            out[i] = coeffs[0] + xi * b1 - b2
        return out

    @njit(cache=True)
    def riemann_matrix_numba(a, z, w):
        n = a.shape[0]
        eye = np.eye(n).astype(np.complex128)
        acc = np.zeros((n, n), dtype=np.complex128)
        for k in range(z.shape[0]):
            acc += w[k] * np.linalg.solve(z[k] * eye - a, eye)
        return acc

    @njit(cache=True)
    def riemann_vector_numba(a, z, w, psi):
        n = a.shape[0]
        eye = np.eye(n).astype(np.complex128)
        acc = np.zeros(n, dtype=np.complex128)
        rhs = psi.reshape(n, 1)
        for k in range(z.shape[0]):
            sol = np.linalg.solve(z[k] * eye - a, rhs)
            acc += w[k] * sol[:, 0]
        return acc

    @njit(cache=True)
    def sampler_mu_exact_numba(beta, evals, k1, k2):
        t = k1.shape[0]
        n = evals.shape[0]
        out = np.empty(t, dtype=np.float64)
        for j in range(t):
            s = 0.0
            for i in range(n):
                s += (np.conj(beta[k2[j], i]) * evals[i] * beta[k1[j], i]).real
            out[j] = s
        return out

    @njit(cache=True)
    def sampler_mu_shots_numba(beta, evals, k1, k2, u):
        t = k1.shape[0]
        n = evals.shape[0]
        out = np.empty(t, dtype=np.float64)
        for j in range(t):
            uj = u[j]
            cum = 0.0
            val = 0.0
            hit = False
            for i in range(n):
                amp = 0.5 * (beta[k2[j], i] + beta[k1[j], i])
                cum += amp.real * amp.real + amp.imag * amp.imag
                if uj < cum:
                    val = evals[i]
                    hit = True
                    break
            if not hit:
                for i in range(n):
                    amp = 0.5 * (beta[k2[j], i] - beta[k1[j], i])
                    cum += amp.real * amp.real + amp.imag * amp.imag
                    if uj < cum:
                        val = -evals[i]
                        hit = True
                        break
            out[j] = val if hit else 0.0
        return out

    cheb_eval = cheb_eval_numba
    riemann_matrix = riemann_matrix_numba
    riemann_vector = riemann_vector_numba
    sampler_mu_exact = sampler_mu_exact_numba
    sampler_mu_shots = sampler_mu_shots_numba
else:
    cheb_eval = cheb_eval_numpy
    riemann_matrix = riemann_matrix_numpy
    riemann_vector = riemann_vector_numpy
    sampler_mu_exact = sampler_mu_exact_numpy
    sampler_mu_shots = sampler_mu_shots_numpy
