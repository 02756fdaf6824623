"""Benchmark the numba kernels against their pure-numpy twins.

Run:  python benchmarks/bench_kernels.py
(Needs numba importable; QCONTOUR_DISABLE_NUMBA only affects the package
dispatch, both twins are timed here directly.)
"""

import time

import numpy as np

from qcontour import _kernels as K


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up (numba compiles here)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def row(name, t_numpy, t_numba):
    speedup = t_numpy / t_numba if t_numba > 0 else float("inf")
    print(f"{name:<34} numpy {t_numpy*1e3:9.3f} ms   numba {t_numba*1e3:9.3f} ms   x{speedup:5.1f}")


def main():
    if not hasattr(K, "cheb_eval_numba"):
        print("numba unavailable; nothing to compare")
        return
    rng = np.random.default_rng(0)

    coeffs = rng.normal(size=401)
    x = rng.uniform(-1, 1, 300000)
    row(
        "cheb_eval       (deg 400, 3e5 pts)",
        timeit(K.cheb_eval_numpy, coeffs, x),
        timeit(K.cheb_eval_numba, coeffs, x),
    )

    n, m = 8, 4096
    a = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * 0.1
    z = 2.0 * np.exp(2j * np.pi * rng.uniform(size=m))
    w = rng.normal(size=m) + 1j * rng.normal(size=m)
    row(
        "riemann_matrix  (N=8, M=4096)",
        timeit(K.riemann_matrix_numpy, a, z, w),
        timeit(K.riemann_matrix_numba, a, z, w),
    )
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    row(
        "riemann_vector  (N=8, M=4096)",
        timeit(K.riemann_vector_numpy, a, z, w, psi),
        timeit(K.riemann_vector_numba, a, z, w, psi),
    )

    nodes, dim, shots = 1024, 4, 200000
    beta = (rng.normal(size=(nodes, dim)) + 1j * rng.normal(size=(nodes, dim))) / (
        2 * np.sqrt(dim)
    )
    evals = rng.normal(size=dim)
    k1 = rng.integers(0, nodes, shots)
    k2 = rng.integers(0, nodes, shots)
    u = rng.uniform(0, 1, shots)
    row(
        "sampler_mu_exact (2e5 shots)",
        timeit(K.sampler_mu_exact_numpy, beta, evals, k1, k2),
        timeit(K.sampler_mu_exact_numba, beta, evals, k1, k2),
    )
    row(
        "sampler_mu_shots (2e5 shots)",
        timeit(K.sampler_mu_shots_numpy, beta, evals, k1, k2, u),
        timeit(K.sampler_mu_shots_numba, beta, evals, k1, k2, u),
    )


if __name__ == "__main__":
    main()
