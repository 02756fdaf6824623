"""Dense complex linear algebra foundation and spectral utilities.

Everything here works on plain ``numpy`` arrays: a "matrix" is a square,
finite, complex ``ndarray`` and a "state" is a 1-D complex vector.  The
operator norm is the spectral (2-)norm throughout, computed by SVD.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import errors

#: Cap on the eigenvector-matrix condition number before a matrix is
#: declared numerically non-diagonalizable.
DEFAULT_COND_CAP = 1e8


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise errors.DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise errors.NumericalError("matrix has non-finite entries")
    return a


def as_state(psi, *, unit=False, tol=1e-10) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    if not np.all(np.isfinite(psi.view(np.float64))):
        raise errors.NumericalError("state has non-finite entries")
    if unit and abs(np.linalg.norm(psi) - 1.0) > tol:
        raise errors.PreconditionError("state is not unit norm")
    return psi


def spectral_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), 2))


@dataclass(frozen=True)
class SpectralInfo:
    """Eigendecomposition summary of a square matrix.

    ``eigenvectors`` is the matrix S in A = S D S^{-1} (None when the
    decomposition is numerically unreliable); ``kappa_s`` is the 2-norm
    condition number of S; ``diagonalizable`` reports kappa_s against
    the cap used at construction.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    kappa_s: float
    spectral_radius: float
    diagonalizable: bool


def spectral_info(a, cond_cap: float = DEFAULT_COND_CAP) -> SpectralInfo:
    a = as_matrix(a)
    evals, s = np.linalg.eig(a)
    kappa = float(np.linalg.cond(s, 2))
    rho = float(np.max(np.abs(evals))) if len(evals) else 0.0
    diag = bool(np.isfinite(kappa) and kappa <= cond_cap)
    return SpectralInfo(
        eigenvalues=evals,
        eigenvectors=s if diag else None,
        kappa_s=kappa,
        spectral_radius=rho,
        diagonalizable=diag,
    )


def matrix_function_oracle(a, f, cond_cap: float = DEFAULT_COND_CAP) -> np.ndarray:
    """Ground-truth f(A) = S f(D) S^{-1} via eigendecomposition.

    This is the reference route every other evaluation path in the package
    is checked against.  Raises :class:`errors.NonDiagonalizable` when the
    eigenvector matrix is too ill-conditioned and
    :class:`errors.FunctionSingularAtEigenvalue` when f blows up on the
    spectrum.
    """
    a = as_matrix(a)
    info = spectral_info(a, cond_cap)
    if not info.diagonalizable:
        raise errors.NonDiagonalizable(
            f"kappa_S = {info.kappa_s:.3e} exceeds cap {cond_cap:.1e}"
        )
    try:
        with np.errstate(all="ignore"):
            fd = np.asarray([f(lam) for lam in info.eigenvalues], dtype=np.complex128)
    except ArithmeticError as exc:
        raise errors.FunctionSingularAtEigenvalue(str(exc)) from exc
    if not np.all(np.isfinite(fd.view(np.float64))):
        raise errors.FunctionSingularAtEigenvalue(
            "f is non-finite on at least one eigenvalue"
        )
    s = info.eigenvectors
    return s @ (fd[:, None] * np.linalg.inv(s))


def expm_oracle(a) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring (independent of the
    eigendecomposition route, so the two oracles cross-validate)."""
    return sla.expm(as_matrix(a))


def resolvent_norm(a, z) -> float:
    """|| (zI - A)^{-1} || = 1 / sigma_min(zI - A)."""
    a = as_matrix(a)
    shifted = complex(z) * np.eye(a.shape[0]) - a
    smin = float(np.linalg.svd(shifted, compute_uv=False)[-1])
    scale = max(abs(complex(z)), spectral_norm(a), 1.0)
    if smin <= 1e-14 * scale:
        raise errors.SingularResolvent(f"sigma_min = {smin:.3e} at z = {z}")
    return 1.0 / smin


def resolvent_bound_diagonalizable(spec: SpectralInfo, min_distance: float) -> float:
    """Upper bound kappa_S / a on the resolvent norm, valid for every z at
    distance >= a from all eigenvalues of a diagonalizable matrix."""
    if min_distance <= 0:
        raise errors.PreconditionError("min_distance must be positive")
    if not spec.diagonalizable:
        raise errors.NonDiagonalizable("bound requires a diagonalizable matrix")
    return spec.kappa_s / min_distance


def nilpotent_shift(n: int, a: float) -> np.ndarray:
    """a * L_n, the scaled upper shift matrix (spectral radius 0, L^n = 0)."""
    return a * np.eye(n, k=1).astype(np.complex128)


def nilpotent_resolvent_bound(n: int, a: float, abs_z: float) -> float:
    """Resolvent-norm bound (1 - (a/|z|)^n) / (|z| - a) for A = a L_n, |z| > a."""
    if abs_z <= a:
        raise errors.PreconditionError("bound requires |z| > a")
    return (1.0 - (a / abs_z) ** n) / (abs_z - a)


@dataclass(frozen=True)
class DissipativityReport:
    re_lambda_non_positive: bool
    re_lambda_strictly_negative: bool
    negative_semidefinite_sym_part: bool


def check_dissipativity(a, *, eig_tol_factor=1e-8, sym_tol_factor=1e-10) -> DissipativityReport:
    """Classify the stability structure of A.

    The symmetric-part test checks the eigenvalues of A + A^dagger against
    ``sym_tol_factor * ||A||``; the eigenvalue tests use
    ``eig_tol_factor * ||A||``.  Negative-semidefinite symmetric part
    implies non-positive eigenvalue real parts; the converse fails (e.g.
    the 2x2 upper shift).
    """
    a = as_matrix(a)
    scale = max(spectral_norm(a), 1e-300)
    re = np.linalg.eigvals(a).real
    sym_eigs = np.linalg.eigvalsh(a + a.conj().T)
    return DissipativityReport(
        re_lambda_non_positive=bool(np.all(re <= eig_tol_factor * scale)),
        re_lambda_strictly_negative=bool(np.all(re < -eig_tol_factor * scale)),
        negative_semidefinite_sym_part=bool(np.all(sym_eigs <= sym_tol_factor * scale)),
    )


# -- random test-matrix factory -------------------------------------------

@dataclass(frozen=True)
class SpectrumRegion:
    """Eigenvalue-placement descriptor for :func:`random_diagonalizable`.

    kind is one of "imaginary-interval" (params lo, hi on the imaginary
    axis), "disk" (params center, radius) or "left-strip"
    (params re_min < re_max <= 0 and im_max).
    """

    kind: str
    params: dict

    @staticmethod
    def imaginary_interval(lo=-1.0, hi=1.0):
        return SpectrumRegion("imaginary-interval", {"lo": lo, "hi": hi})

    @staticmethod
    def disk(center=0j, radius=1.0):
        return SpectrumRegion("disk", {"center": complex(center), "radius": radius})

    @staticmethod
    def left_strip(re_min=-2.0, re_max=-0.5, im_max=1.0):
        return SpectrumRegion(
            "left-strip", {"re_min": re_min, "re_max": re_max, "im_max": im_max}
        )


def _draw_eigenvalues(region: SpectrumRegion, n: int, rng) -> np.ndarray:
    p = region.params
    if region.kind == "imaginary-interval":
        return 1j * rng.uniform(p["lo"], p["hi"], n)
    if region.kind == "disk":
        r = p["radius"] * np.sqrt(rng.uniform(0.0, 1.0, n))
        ang = rng.uniform(0.0, 2 * np.pi, n)
        return p["center"] + r * np.exp(1j * ang)
    if region.kind == "left-strip":
        return rng.uniform(p["re_min"], p["re_max"], n) + 1j * rng.uniform(
            -p["im_max"], p["im_max"], n
        )
    raise errors.PreconditionError(f"unknown spectrum region kind {region.kind!r}")


def _random_unitary(n: int, rng) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_diagonalizable(
    n: int, target_kappa_s: float, region: SpectrumRegion, seed: int
):
    """Deterministic A = S D S^{-1} with eigenvalues in ``region`` and
    cond(S) equal to ``target_kappa_s`` by construction.

    S = U1 diag(geomspace(1, 1/kappa)) U2^dagger for Haar-ish unitaries
    U1, U2, so the measured kappa_S matches the target to roundoff (well
    within the documented factor-2 contract).
    """
    if target_kappa_s < 1.0:
        raise errors.UnreachableKappa("condition numbers below 1 are impossible")
    rng = np.random.default_rng(seed)
    evals = _draw_eigenvalues(region, n, rng)
    u1 = _random_unitary(n, rng)
    u2 = _random_unitary(n, rng)
    sing = np.geomspace(1.0, 1.0 / target_kappa_s, n) if n > 1 else np.array([1.0])
    s = (u1 * sing) @ u2.conj().T
    a = s @ (evals[:, None] * np.linalg.inv(s))
    kappa = float(np.linalg.cond(s, 2))
    info = SpectralInfo(
        eigenvalues=evals,
        eigenvectors=s,
        kappa_s=kappa,
        spectral_radius=float(np.max(np.abs(evals))),
        diagonalizable=True,
    )
    return a, info
