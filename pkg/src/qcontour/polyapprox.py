"""Odd Chebyshev approximation of the rescaled inverse, and its
singular-value application.

``build_inverse_poly`` produces an odd polynomial p with

    |p(x) - 3 delta / (4 x)| <= eps'   on [delta, 1]   (and by oddness on
                                        [-1, -delta]), and
    |p(x)| <= 1                        on [-1, 1],

both certified on dense grids.  ``generalized_matrix_function`` applies any
odd polynomial to the singular values: p applied to M = W Sigma V^dagger
gives W p(Sigma) V^dagger (ideal singular-value-transform semantics).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.special import erf, erfinv
from scipy.stats import binom

from . import errors
from ._kernels import cheb_eval

DEFAULT_DEGREE_CAP = 20000
CERT_GRID = 100001


@dataclass(frozen=True)
class OddPolynomial:
    """Odd polynomial in the Chebyshev basis.

    ``odd_coeffs[j]`` multiplies T_{2j+1}; even coefficients are
    structurally zero (never stored).  ``certified_sup_error`` /
    ``certified_max_abs`` are the grid-certified bounds recorded at
    construction.
    """

    odd_coeffs: np.ndarray
    delta: float
    eps_prime: float
    certified_sup_error: float
    certified_max_abs: float

    @property
    def degree(self) -> int:
        return 2 * len(self.odd_coeffs) - 1

    def full_coeffs(self) -> np.ndarray:
        full = np.zeros(self.degree + 1)
        full[1::2] = self.odd_coeffs
        return full

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return cheb_eval(self.full_coeffs(), x)


def identity_polynomial() -> OddPolynomial:
    """p(x) = x, i.e. a single unit coefficient on T_1."""
    return OddPolynomial(
        odd_coeffs=np.array([1.0]),
        delta=0.0,
        eps_prime=0.0,
        certified_sup_error=0.0,
        certified_max_abs=1.0,
    )


def _truncate_tail(coeffs: np.ndarray, budget: float) -> np.ndarray:
    """Drop the hinder tail whose absolute-coefficient sum fits the budget."""
    tail = np.cumsum(np.abs(coeffs[::-1]))[::-1]
    keep = np.nonzero(tail <= budget)[0]
    return coeffs[: keep[0]] if len(keep) else coeffs


def _damping_step(delta: float, eps_in: float):
    """Even smooth step: ~0 where the regularized inverse overshoots 1
    (|x| < ~3 delta / 4), within (2/3) eps_in of 1 on [delta, 1]."""
    m = 0.3 * delta**2
    k = erfinv(1.0 - (2.0 / 3.0) * eps_in) / (delta**2 - m)
    return lambda x: 0.5 * (1.0 + erf(k * (x * x - m)))


def build_inverse_poly(
    delta: float, eps_prime: float, degree_cap: int = DEFAULT_DEGREE_CAP
) -> OddPolynomial:
    """Odd polynomial approximating 3 delta / (4 x) away from the origin.

    Construction: truncated Chebyshev expansion of the regularized inverse
    (3 delta / 4) (1 - (1 - x^2)^b) / x with b = ceil(ln(4/(delta eps)) /
    delta^2), whose odd coefficients are binomial tail probabilities in
    closed form; multiplied by an even polynomial step that damps the
    overshoot region |x| < delta; rescaled by 1/(1 + eps) to pin
    |p| <= 1.  Built against an internal budget of eps_prime / 2 so the
    published certificate meets the caller's eps_prime.
    """
    if not 0.0 < delta < 1.0:
        raise errors.PreconditionError("delta must lie in (0, 1)")
    if not 0.0 < eps_prime < 0.75:
        raise errors.PreconditionError("eps_prime must lie in (0, 3/4)")
    eps_in = eps_prime / 2.0

    b = int(np.ceil(np.log(4.0 / (delta * eps_in)) / delta**2))
    j = np.arange(b)
    # coefficient of T_{2j+1} in (3 delta / 4) * (1 - (1-x^2)^b)/x:
    # 3 delta (-1)^j P[X >= b + j + 1], X ~ Binomial(2b, 1/2)
    coef_q = 3.0 * delta * ((-1.0) ** j) * binom.sf(b + j, 2 * b, 0.5)
    coef_q = _truncate_tail(coef_q, eps_in / 4.0)
    cq = np.zeros(2 * len(coef_q))
    cq[1::2] = coef_q

    step = _damping_step(delta, eps_in)
    cr = None
    for deg in (64, 128, 256, 512, 1024, 2048, 4096, 8192):
        cr = cheb.chebinterpolate(step, deg)
        if np.max(np.abs(cr[-4:])) < 1e-13:
            break
    cr[1::2] = 0.0  # structurally even
    cr = _truncate_tail(cr, eps_in / 16.0)

    cp = cheb.chebmul(cq, cr)
    cp[0::2] = 0.0  # odd x even = odd; clear roundoff on even entries
    cp = _truncate_tail(cp, eps_in / 4.0)
    if len(cp) % 2 == 1:
        cp = cp[:-1]
    if len(cp) < 2:
        raise errors.CertificationFailed("construction collapsed to degree < 1")
    cp = cp / (1.0 + eps_in)

    degree = len(cp) - 1
    if degree > degree_cap:
        raise errors.DegreeCapExceeded(f"degree {degree} exceeds cap {degree_cap}")

    xs = np.linspace(delta, 1.0, CERT_GRID)
    sup_err = float(np.max(np.abs(cheb_eval(cp, xs) - 3.0 * delta / (4.0 * xs))))
    xa = np.linspace(-1.0, 1.0, CERT_GRID)
    max_abs = float(np.max(np.abs(cheb_eval(cp, xa))))
    if sup_err > eps_prime or max_abs > 1.0:
        raise errors.CertificationFailed(
            f"certificates violated: sup_err={sup_err:.3e} (budget {eps_prime:.3e}), "
            f"max_abs={max_abs:.6f}"
        )
    return OddPolynomial(
        odd_coeffs=cp[1::2].copy(),
        delta=delta,
        eps_prime=eps_prime,
        certified_sup_error=sup_err,
        certified_max_abs=max_abs,
    )


def generalized_matrix_function(p: OddPolynomial, mtx, dagger: bool = False) -> np.ndarray:
    """Apply p to the singular values: W p(Sigma) V^dagger for
    M = W Sigma V^dagger (or V p(Sigma) W^dagger when ``dagger``).

    Requires ||M|| <= 1 so the singular values stay in p's certified
    domain.  With degenerate singular values the SVD factors are gauge
    ambiguous but the result is not; compare gauge-free quantities in
    tests.
    """
    mtx = np.asarray(mtx, dtype=np.complex128)
    w, sig, vh = np.linalg.svd(mtx)
    if sig[0] > 1.0 + 1e-10:
        raise errors.NormExceedsOne(f"||M|| = {sig[0]!r} > 1")
    psig = p.eval(np.clip(sig, 0.0, 1.0))
    if dagger:
        return (vh.conj().T * psig) @ w.conj().T
    return (w * psig) @ vh


def inverse_error_certificate(p: OddPolynomial, mtx) -> float:
    """Exact operator-norm distance || p(M)^dagger - (3 delta/4) M^{-1} ||.

    All singular values of M must lie in [p.delta, 1]; by unitary
    invariance the distance equals max_k |p(sigma_k) - 3 delta/(4 sigma_k)|
    and is certified <= p.eps_prime by construction.
    """
    mtx = np.asarray(mtx, dtype=np.complex128)
    sig = np.linalg.svd(mtx, compute_uv=False)
    lo, hi = p.delta * (1.0 - 1e-12), 1.0 + 1e-10
    for k, s in enumerate(sig):
        if not lo <= s <= hi:
            raise errors.SingularValueOutOfRange(k, float(s), p.delta, 1.0)
    gmf = generalized_matrix_function(p, mtx, dagger=True)
    target = (3.0 * p.delta / 4.0) * np.linalg.inv(mtx)
    return float(np.linalg.norm(gmf - target, 2))


def poly_to_json(p: OddPolynomial) -> dict:
    return {
        "delta": p.delta,
        "epsPrime": p.eps_prime,
        "chebyshevCoeffs": [float(c) for c in p.odd_coeffs],
        "certifiedSupError": p.certified_sup_error,
        "certifiedMaxAbs": p.certified_max_abs,
    }


def poly_from_json(doc: dict) -> OddPolynomial:
    try:
        return OddPolynomial(
            odd_coeffs=np.asarray(doc["chebyshevCoeffs"], dtype=np.float64),
            delta=float(doc["delta"]),
            eps_prime=float(doc["epsPrime"]),
            certified_sup_error=float(doc["certifiedSupError"]),
            certified_max_abs=float(doc["certifiedMaxAbs"]),
        )
    except KeyError as exc:
        raise errors.ParseError(f"polynomial document missing field {exc}") from exc
