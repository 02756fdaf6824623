"""Command-line front end.

Subcommands: apply (normalized-state output), estimate (sampling
estimator), resources (formula rows for both paths), study (registered
sweeps emitting deterministic CSV).  Same config + same seed produces
byte-identical output files; every failure path writes a structured error
record and exits with the documented code (2 parse, 3 precondition, 4
numerical, 5 internal).
"""

import argparse
import math
import sys

import numpy as np

from . import errors, io
from .apps import (
    ApplicationProblem,
    estimate_resources,
    problem_setup,
    resource_to_json,
    solve_hamiltonian_simulation,
    solve_matrix_polynomial,
    solve_ode,
)
from .blockenc import outer_coefficients
from .contour import discretize, make_circle, verify_enclosure
from .numkit import SpectrumRegion, matrix_function_oracle, random_diagonalizable
from .polyapprox import build_inverse_poly
from .quadrature import (
    bounds_on_contour,
    exp_scaled,
    node_resolvent_norms,
    riemann_sum_matrix,
)
from .sampler import build_plan, gmf_node_blocks, run_estimator, estimate_observable


def _write_output(doc_or_text, out_path, is_text=False):
    if out_path is None:
        sys.stdout.write(doc_or_text if is_text else io.dump_json(doc_or_text) + "\n")
    elif is_text:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(doc_or_text)
    else:
        io.dump_json(doc_or_text, out_path)


def _run_apply(problem: ApplicationProblem, args):
    kwargs = {"m_override": args.M} if args.M else {}
    if problem.kind == "hamiltonian-simulation":
        res, est = solve_hamiltonian_simulation(
            problem.matrix, problem.t, problem.state, problem.epsilon,
            a=problem.contour_param_a, **kwargs,
        )
        combo = {}
    elif problem.kind == "matrix-polynomial":
        res, est = solve_matrix_polynomial(
            problem.matrix, problem.poly_coeffs, problem.state, problem.epsilon,
            a=problem.contour_param_a, **kwargs,
        )
        combo = {}
    else:
        variant = "generic" if problem.kind == "ode-generic" else "fast-forward"
        res, est, combo = solve_ode(
            problem.matrix, problem.state, problem.t, problem.epsilon,
            variant=variant, b=problem.b, a=problem.contour_param_a, **kwargs,
        )
    warnings = []
    budget = res.diagnostics["normFPsi"] * problem.epsilon / 4.0
    if res.diagnostics["aprioriBound"] > budget:
        warnings.append("aprioriBound exceeds budget")
    doc = {
        "command": "apply",
        "kind": problem.kind,
        "epsilon": problem.epsilon,
        "seed": args.seed,
        "state": io.state_to_json(res.state),
        "successProbability": res.success_probability,
        "amplificationRounds": res.amplification_rounds,
        "bounds": {
            "aprioriBound": res.diagnostics["aprioriBound"],
            "budget": budget,
            "epsPrime": res.diagnostics["epsPrime"],
            "oneNorm": res.diagnostics["oneNorm"],
        },
        "diagnostics": res.diagnostics,
        "resourceEstimate": resource_to_json(est),
        "warnings": warnings,
    }
    if combo:
        doc["inhomogeneous"] = {
            "xT": io.state_to_json(combo["xT"]),
            "xTNorm": combo["xTNorm"],
            "oracleDistance": combo["oracleDistance"],
        }
    if "stability" in res.diagnostics:
        res.diagnostics["stability"] = {
            k: bool(v) for k, v in res.diagnostics["stability"].items()
        }
    return doc


def _run_estimate(problem: ApplicationProblem, args):
    if problem.observable is None:
        raise errors.MissingParameter("estimate needs an 'observable' in the problem file")
    work, f, c, gamma, _, _, alpha = problem_setup(problem)
    result, diag = estimate_observable(
        work, problem.state, problem.observable, f, c,
        problem.epsilon, problem.xi2, mode=args.mode, seed=args.seed,
        alpha=alpha, gamma=gamma,
    )
    fa = matrix_function_oracle(work, bounds_on_contour(f, c).fn)
    truth_vec = fa @ np.asarray(problem.state)
    truth = float(np.real(truth_vec.conj() @ (problem.observable @ truth_vec)))
    doc = {
        "command": "estimate",
        "kind": problem.kind,
        "result": result.to_json(),
        "diagnostics": diag,
        "oracleValue": truth,
        "absError": abs(result.mu - truth),
    }
    return doc


def _run_resources(problem: ApplicationProblem, args):
    return {
        "command": "resources",
        "kind": problem.kind,
        "lcu": resource_to_json(estimate_resources(problem, path="lcu")),
        "sampler": resource_to_json(estimate_resources(problem, path="sampler")),
    }


# -- studies -----------------------------------------------------------------


def _study_quadrature_rate(seed):
    a, info = random_diagonalizable(4, 2.0, SpectrumRegion.disk(0j, 0.5), seed)
    radius = info.spectral_radius + 0.5
    c = make_circle(0.0, radius)
    enc = verify_enclosure(c, info)
    gamma = info.kappa_s / enc.min_distance
    # a pole just outside the contour keeps the error visibly decaying over
    # the whole sweep instead of flooring at machine precision
    rng = np.random.default_rng(seed)
    pole = radius * 1.02 * np.exp(2j * np.pi * rng.uniform())
    f = bounds_on_contour(lambda z: 1.0 / (z - pole), c)
    oracle = matrix_function_oracle(a, f.fn)
    rows = []
    for m in (16, 64, 256, 1024):
        res = riemann_sum_matrix(a, discretize(c, m), f, gamma=gamma)
        rows.append(
            {
                "M": m,
                "measuredError": float(np.linalg.norm(oracle - res.value, 2)),
                "aprioriBound": res.apriori_bound,
            }
        )
    return rows, ["M", "measuredError", "aprioriBound"]


def coverage_trial_pieces(epsilon=0.2, xi2=0.1):
    """Shared fixed 2x2 instance for coverage experiments: everything but
    the per-trial seed.  Kept lean (small ||c||_1) so the Hoeffding T stays
    in the tens of thousands."""
    a = np.diag([0.3 + 0.1j, -0.2 + 0.05j])
    psi = np.array([1.0, 1.0]) / np.sqrt(2)
    o = np.array([[1.0, 0.0], [0.0, -1.0]])
    c = make_circle(0.0, 1.0)
    hf = bounds_on_contour(exp_scaled(1.0), c)
    alpha = float(np.linalg.norm(a, 2))
    fa = matrix_function_oracle(a, hf.fn)
    norm_fa = float(np.linalg.norm(fa, 2))
    xi1 = epsilon / (6.0 * norm_fa)
    from .quadrature import sampled_gamma, select_m

    gamma = sampled_gamma(a, c)
    m = select_m(hf.bound_b, hf.lipschitz_l, gamma, c.total_length, xi1 / 2.0)
    nodes = discretize(c, m)
    gamma_used = max(gamma, float(np.max(node_resolvent_norms(a, nodes))))
    delta = 1.0 / (gamma_used * (alpha + c.enclosing_radius))
    coeffs = outer_coefficients(nodes, hf, alpha, delta)
    poly = build_inverse_poly(delta, xi1 / (2.0 * coeffs.one_norm))
    blocks = gmf_node_blocks(a, nodes, alpha, poly)
    tv = fa @ psi
    truth = float(np.real(tv.conj() @ (o @ tv)))
    return coeffs, blocks, psi, o, truth, epsilon, xi2


def _study_hoeffding_coverage(seed, trials=200):
    rng = np.random.default_rng(seed)
    coeffs, blocks, psi, o, truth, epsilon, xi2 = coverage_trial_pieces()
    rows = []
    covered_so_far = 0
    for i in range(trials):
        plan = build_plan(coeffs, blocks, epsilon, xi2, norm_o=1.0, mode="shots",
                          seed=int(rng.integers(0, 2**62)))
        result = run_estimator(plan, psi, o)
        covered = abs(result.mu - truth) <= epsilon
        covered_so_far += int(covered)
        rows.append(
            {
                "trial": i,
                "mu": result.mu,
                "truth": truth,
                "absError": abs(result.mu - truth),
                "covered": int(covered),
                "coverageSoFar": covered_so_far / (i + 1.0),
            }
        )
    return rows, ["trial", "mu", "truth", "absError", "covered", "coverageSoFar"]


def _study_ff_ode_time_invariance(seed):
    a, info = random_diagonalizable(
        4, 2.0, SpectrumRegion.left_strip(-1.5, -0.6, 0.8), seed
    )
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1.0
    rows = []
    for t in (1.0, 10.0, 100.0):
        problem = ApplicationProblem(
            kind="ode-fast-forward", matrix=a, state=psi, epsilon=0.01, t=t
        )
        est = estimate_resources(problem, overrides={"normXT": 0.5})
        rows.append({"T": t, "queriesUA": est.queries_ua, "queriesUpsi": est.queries_upsi})
    return rows, ["T", "queriesUA", "queriesUpsi"]


def _study_degree_independence(seed):
    a, info = random_diagonalizable(4, 1.5, SpectrumRegion.disk(0j, 0.4), seed)
    psi = np.ones(4, dtype=complex) / 2.0
    rows = []
    for degree in (10, 20):
        coeffs = [1.0 / math.factorial(k) for k in range(degree + 1)]
        problem = ApplicationProblem(
            kind="matrix-polynomial", matrix=a, state=psi, epsilon=0.1,
            poly_coeffs=tuple(coeffs),
        )
        est = estimate_resources(
            problem, overrides={"B": 2.0, "kappaS": 1.5, "normFPsi": 1.0}
        )
        res, _ = solve_matrix_polynomial(a, coeffs, psi, 0.1)
        rows.append(
            {
                "degree": degree,
                "queriesUA": est.queries_ua,
                "builtPolyDegree": res.diagnostics["polyDegree"],
                "delta": res.diagnostics["delta"],
                "epsPrime": res.diagnostics["epsPrime"],
            }
        )
    return rows, ["degree", "queriesUA", "builtPolyDegree", "delta", "epsPrime"]


STUDIES = {
    "quadrature-rate": _study_quadrature_rate,
    "hoeffding-coverage": _study_hoeffding_coverage,
    "ff-ode-time-invariance": _study_ff_ode_time_invariance,
    "degree-independence": _study_degree_independence,
}


def _run_study(args):
    name = args.study
    if name not in STUDIES:
        raise errors.UnknownStudy(
            f"unknown study {name!r}; registered: {sorted(STUDIES)}"
        )
    rows, columns = STUDIES[name](args.seed)
    if args.format == "json":
        return {"command": "study", "study": name, "rows": rows}, None
    return None, io.format_csv(rows, columns)


def build_parser():
    p = argparse.ArgumentParser(prog="qcontour")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("apply", "estimate", "resources", "study"):
        sp = sub.add_parser(name)
        sp.add_argument("--problem", type=str, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--epsilon", type=float, default=None)
        sp.add_argument("--M", type=int, default=None)
        sp.add_argument("--mode", choices=("exact", "shots"), default="shots")
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        sp.add_argument("--study", type=str, default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "study":
            if args.study is None:
                raise errors.UnknownStudy("study command needs --study <name>")
            args.format = args.format or "csv"
            doc, text = _run_study(args)
            if text is not None:
                _write_output(text, args.out, is_text=True)
            else:
                _write_output(doc, args.out)
            return 0
        if args.problem is None:
            raise errors.ParseError(f"{args.command} needs --problem <file>")
        problem = io.problem_from_json(io.load_json(args.problem))
        if args.epsilon is not None:
            problem.epsilon = args.epsilon
        if args.command == "apply":
            doc = _run_apply(problem, args)
        elif args.command == "estimate":
            doc = _run_estimate(problem, args)
        else:
            doc = _run_resources(problem, args)
        _write_output(doc, args.out)
        return 0
    except errors.QContourError as exc:
        _write_output({"error": exc.record()}, args.out)
        return exc.exit_code
    except Exception as exc:  # internal: still emit a structured record
        _write_output(
            {"error": {"code": 5, "category": "internal", "type": type(exc).__name__,
                       "message": str(exc)}},
            args.out,
        )
        return 5


if __name__ == "__main__":
    sys.exit(main())
