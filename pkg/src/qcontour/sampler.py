"""Randomized single-ancilla estimator for <psi| g(A)^dag O g(A) |psi>.

Instead of the full prepare/select circuit, pairs of node unitaries are
drawn i.i.d. from the normalized coefficient distribution; a swap-type
observable on one extra qubit makes the per-shot expectation an unbiased
estimate of the cross term, and ||c||_1^2 times the shot mean estimates
the target.  Complex coefficient phases are absorbed into the sampled
unitaries, so the distribution itself uses |c_k| / ||c||_1.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import errors
from . import _kernels
from .blockenc import BlockEncoding, outer_coefficients
from .contour import Contour, discretize, verify_enclosure
from .numkit import (
    as_matrix,
    as_state,
    matrix_function_oracle,
    spectral_info,
    spectral_norm,
)
from .polyapprox import build_inverse_poly
from .quadrature import (
    HolomorphicFunction,
    bounds_on_contour,
    node_resolvent_norms,
    sampled_gamma,
    select_m,
)

HOEFFDING_FACTOR = 8.0  # the proof's constant; the bare statement omits it


def repetition_count(norm_o: float, one_norm: float, epsilon: float, xi2: float) -> int:
    """T = ceil(8 ||O||^2 ln(2/xi_2) ||c||_1^4 / eps^2)."""
    if not 0.0 < xi2 < 1.0 or not epsilon > 0.0:
        raise errors.PreconditionError("need epsilon > 0 and xi2 in (0, 1)")
    return int(
        math.ceil(
            HOEFFDING_FACTOR * norm_o**2 * math.log(2.0 / xi2) * one_norm**4 / epsilon**2
        )
    )


@dataclass
class SamplingPlan:
    """Frozen inputs of the randomized estimator.

    ``blocks``[k] is the system-level action of the k-th (phase-absorbed)
    unitary on the ancilla-zero subspace; sampling and Born draws are
    driven by a counter-based Philox stream seeded with ``seed``.
    """

    probabilities: np.ndarray
    blocks: np.ndarray
    one_norm: float
    repetitions: int
    mode: str
    seed: int
    epsilon: float
    xi2: float
    ancilla_count: int
    t_statement: int  # same bound without the proof's factor 8

    @property
    def node_count(self) -> int:
        return len(self.probabilities)


def _blocks_from(per_node, coeffs, ancilla_hint) -> tuple[np.ndarray, int]:
    if isinstance(per_node, np.ndarray):
        blocks = np.asarray(per_node, dtype=np.complex128)
        ancilla = ancilla_hint
    else:
        if not per_node:
            raise errors.PreconditionError("empty unitary list")
        ancilla = per_node[0].ancilla_count
        n = per_node[0].dim
        for enc in per_node:
            if not isinstance(enc, BlockEncoding):
                raise errors.PreconditionError("per-node entries must be encodings")
            if enc.dim != n or enc.ancilla_count != ancilla:
                raise errors.DimensionMismatch("per-node encodings differ in shape")
        blocks = np.stack([enc.block for enc in per_node])
    if blocks.shape[0] != len(coeffs.c):
        raise errors.DimensionMismatch("coefficient/unitary count mismatch")
    return blocks, ancilla


def build_plan(
    coeffs,
    per_node,
    epsilon: float,
    xi2: float,
    norm_o: float = 1.0,
    mode: str = "shots",
    seed: int = 0,
    ancilla_count: int = 3,
) -> SamplingPlan:
    """Sampling distribution |c_k| / ||c||_1, phase-absorbed unitaries and
    the Hoeffding repetition count for accuracy epsilon at confidence
    (1 - xi2)^2.

    ``per_node`` is either a list of per-node block-encodings or a stacked
    (M, N, N) array of their system-level blocks; in the latter case
    ``ancilla_count`` supplies the per-node ancilla tally (a + 2, i.e. 3
    for the standard one-ancilla dilation).
    """
    if mode not in ("shots", "exact"):
        raise errors.PreconditionError(f"unknown mode {mode!r}")
    blocks, ancilla = _blocks_from(per_node, coeffs, ancilla_count)
    phases = np.ones(len(coeffs.c), dtype=np.complex128)
    nz = np.abs(coeffs.c) > 0
    phases[nz] = coeffs.c[nz] / np.abs(coeffs.c[nz])
    blocks = phases[:, None, None] * blocks
    probs = np.abs(coeffs.c) / coeffs.one_norm
    t = repetition_count(norm_o, coeffs.one_norm, epsilon, xi2)
    t_statement = int(
        math.ceil(norm_o**2 * math.log(2.0 / xi2) * coeffs.one_norm**4 / epsilon**2)
    )
    return SamplingPlan(
        probabilities=probs,
        blocks=blocks,
        one_norm=coeffs.one_norm,
        repetitions=t,
        mode=mode,
        seed=seed,
        epsilon=epsilon,
        xi2=xi2,
        ancilla_count=ancilla,
        t_statement=t_statement,
    )


@dataclass
class EstimatorResult:
    mu: float
    count: int
    sample_mean: float
    sample_variance: float
    repetitions: int
    epsilon: float
    xi2: float
    mode: str
    seed: int
    ancilla_qubits: int

    def to_json(self) -> dict:
        return {
            "mu": self.mu,
            "T": self.repetitions,
            "epsilon": self.epsilon,
            "xi2": self.xi2,
            "mode": self.mode,
            "seed": self.seed,
            "samplesSummary": {
                "count": self.count,
                "mean": self.sample_mean,
                "variance": self.sample_variance,
            },
            "ancillaQubits": self.ancilla_qubits,
        }


def _check_hermitian(o) -> np.ndarray:
    o = as_matrix(o)
    if np.linalg.norm(o - o.conj().T, 2) > 1e-10:
        raise errors.NotHermitian("observable must be Hermitian")
    return o


def run_estimator(plan: SamplingPlan, psi, o) -> EstimatorResult:
    """Execute the plan on |psi> with observable O.

    In "exact" mode each repetition records the exact expectation of the
    swap observable for the drawn pair (unbiased, lower variance); in
    "shots" mode it records one Born-rule eigenvalue draw, which is the
    hardware-faithful protocol.  All randomness comes from a Philox
    counter stream: node draws first, then one uniform per shot.
    """
    o = _check_hermitian(o)
    psi = as_state(psi, unit=True)
    t = plan.repetitions
    rng = np.random.Generator(np.random.Philox(plan.seed))
    k1 = rng.choice(plan.node_count, size=t, p=plan.probabilities).astype(np.int64)
    k2 = rng.choice(plan.node_count, size=t, p=plan.probabilities).astype(np.int64)
    evals, vecs = np.linalg.eigh(o)
    # beta[k, i] = <v_i | block_k psi>
    w = np.einsum("kij,j->ki", plan.blocks, psi)
    beta = w @ vecs.conj()
    if plan.mode == "exact":
        mu_j = _kernels.sampler_mu_exact(beta, evals, k1, k2)
    else:
        u = rng.uniform(0.0, 1.0, size=t)
        mu_j = _kernels.sampler_mu_shots(beta, evals, k1, k2, u)
    mean = float(np.mean(mu_j))
    var = float(np.var(mu_j, ddof=1)) if t > 1 else 0.0
    return EstimatorResult(
        mu=plan.one_norm**2 * mean,
        count=t,
        sample_mean=mean,
        sample_variance=var,
        repetitions=t,
        epsilon=plan.epsilon,
        xi2=plan.xi2,
        mode=plan.mode,
        seed=plan.seed,
        ancilla_qubits=plan.ancilla_count + 1,
    )


def enumerate_expectation(plan: SamplingPlan, psi, o) -> float:
    """Exact expectation of mu by enumerating every (V1, V2) pair on the
    full ancilla + swap-qubit space (test oracle; small node counts only).

    Builds |psi'> = V~_2 V~_1 |+>|0...0>|psi> from dilated per-node
    unitaries and takes <psi'|(X (x) |0..0><0..0| (x) O)|psi'> weighted by
    the pair probabilities.
    """
    from .blockenc import _psd_sqrt, _embed_with_spectators  # local, test-only path

    o = _check_hermitian(o)
    psi = as_state(psi, unit=True)
    m, n = plan.blocks.shape[0], plan.blocks.shape[1]
    spect = plan.ancilla_count - 1
    fulls = []
    for k in range(m):
        g = plan.blocks[k]
        core = np.zeros((2 * n, 2 * n), dtype=np.complex128)
        core[:n, :n] = g
        core[:n, n:] = _psd_sqrt(np.eye(n) - g @ g.conj().T)
        core[n:, :n] = _psd_sqrt(np.eye(n) - g.conj().T @ g)
        core[n:, n:] = -g.conj().T
        fulls.append(_embed_with_spectators(core, n, spect))
    d = fulls[0].shape[0]
    psi_t = np.zeros(d, dtype=np.complex128)
    psi_t[:n] = psi
    o_t = np.zeros((d, d), dtype=np.complex128)
    o_t[:n, :n] = o
    total = 0.0
    for i in range(m):
        for j in range(m):
            v1 = fulls[i] @ psi_t
            v2 = fulls[j] @ psi_t
            # <psi'|(X x O~)|psi'> with psi' = (|0> v2 + |1> v1)/sqrt(2)
            val = float(np.real(v2.conj() @ (o_t @ v1)))
            total += plan.probabilities[i] * plan.probabilities[j] * val
    return plan.one_norm**2 * total


@dataclass
class AccuracyBoundReport:
    lhs: float
    rhs: float


def observable_accuracy_bound(p, q, o, psi) -> AccuracyBoundReport:
    """Perturbation bound |<psi|P'OP|psi> - <psi|Q'OQ|psi>| <= 3 ||O|| ||P|| ||P-Q||,
    valid when ||P - Q|| <= 1 <= ||P||."""
    p = as_matrix(p)
    q = as_matrix(q)
    o = _check_hermitian(o)
    psi = as_state(psi, unit=True)
    xi = float(np.linalg.norm(p - q, 2))
    norm_p = float(np.linalg.norm(p, 2))
    if xi > 1.0 + 1e-12:
        raise errors.HypothesisViolated(f"||P - Q|| = {xi} > 1")
    if norm_p < 1.0 - 1e-12:
        raise errors.HypothesisViolated(f"||P|| = {norm_p} < 1")
    lhs = abs(
        float(np.real(psi.conj() @ (p.conj().T @ (o @ (p @ psi)))))
        - float(np.real(psi.conj() @ (q.conj().T @ (o @ (q @ psi)))))
    )
    rhs = 3.0 * float(np.linalg.norm(o, 2)) * norm_p * xi
    return AccuracyBoundReport(lhs=lhs, rhs=rhs)


def estimate_observable(
    a,
    psi,
    o,
    f,
    contour_obj: Contour,
    epsilon: float,
    xi2: float,
    mode: str = "shots",
    seed: int = 0,
    *,
    alpha: float | None = None,
    gamma: float | None = None,
) -> tuple[EstimatorResult, dict]:
    """Estimate <psi| f(A)^dag O f(A) |psi> to epsilon at confidence
    (1 - xi2)^2.

    The combination-vs-target budget xi_1 = epsilon / (6 ||O|| ||f(A)||)
    is split evenly: half to the quadrature bound (fixes M), half to the
    per-node polynomial error (fixes eps' = xi_1 / (2 ||c||_1)).
    """
    a = as_matrix(a)
    psi = as_state(psi, unit=True)
    o = _check_hermitian(o)
    if not (0.0 < epsilon < 1.0 and 0.0 < xi2 < 1.0):
        raise errors.PreconditionError("epsilon and xi2 must lie in (0, 1)")
    spec = spectral_info(a)
    enclosure = verify_enclosure(contour_obj, spec)
    if not enclosure.enclosed:
        raise errors.ContourNotEnclosing("contour must enclose the spectrum")
    if alpha is None:
        alpha = spectral_norm(a)
    if not isinstance(f, HolomorphicFunction):
        f = bounds_on_contour(f, contour_obj)
    norm_o = float(np.linalg.norm(o, 2))
    norm_fa = float(np.linalg.norm(matrix_function_oracle(a, f.fn), 2))
    xi1 = epsilon / (6.0 * max(norm_o, 1e-300) * max(norm_fa, 1e-300))

    gamma_bound = float(gamma) if gamma is not None else sampled_gamma(a, contour_obj)
    radius = contour_obj.enclosing_radius
    m = select_m(f.bound_b, f.lipschitz_l, gamma_bound, contour_obj.total_length, xi1 / 2.0)
    nodes = discretize(contour_obj, m)
    rnorms = node_resolvent_norms(a, nodes)
    gamma_used = max(gamma_bound, float(np.max(rnorms)))
    delta = 1.0 / (gamma_used * (alpha + radius))
    coeffs = outer_coefficients(nodes, f, alpha, delta)
    eps_prime = min(xi1 / (2.0 * coeffs.one_norm), 0.7499)
    poly = build_inverse_poly(delta, eps_prime)
    blocks = gmf_node_blocks(a, nodes, alpha, poly)
    plan = build_plan(coeffs, blocks, epsilon, xi2, norm_o=norm_o, mode=mode, seed=seed)
    result = run_estimator(plan, psi, o)
    diagnostics = {
        "M": m,
        "delta": delta,
        "epsPrime": eps_prime,
        "xi1": xi1,
        "oneNorm": coeffs.one_norm,
        "polyDegree": poly.degree,
        "T": plan.repetitions,
        "TStatement": plan.t_statement,
        "ancillaQubits": result.ancilla_qubits,
        "normO": norm_o,
        "normFA": norm_fa,
    }
    return result, diagnostics


def gmf_node_blocks(a, nodes, alpha, poly, chunk: int = 65536) -> np.ndarray:
    """Stacked per-node blocks (p of the k-th shifted block, daggered)."""
    from .blockenc import _chunked_svds, _check_sigma
    from ._kernels import cheb_eval

    a = as_matrix(a)
    n = a.shape[0]
    full = poly.full_coeffs()
    out = np.empty((nodes.m, n, n), dtype=np.complex128)
    for lo, u, sig, vh in _chunked_svds(a, nodes, alpha, chunk):
        _check_sigma(sig, poly.delta, lo)
        pk = cheb_eval(full, np.clip(sig, 0.0, 1.0).ravel()).reshape(sig.shape)
        out[lo : lo + pk.shape[0]] = np.einsum("kti,kt,kjt->kij", vh.conj(), pk, u.conj())
    return out
