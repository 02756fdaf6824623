"""File formats: matrices, states, problems, results.

Complex numbers are stored as [re, im] pairs; floats are emitted by the
shortest round-trip repr, so reading back an emitted document reproduces
the values bit-identically (well inside the 17-significant-digit
contract).
"""

import json

import numpy as np

from . import contour as contour_mod
from . import errors
from .apps import ApplicationProblem


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    return {
        "dim": a.shape[0],
        "entries": [[[float(v.real), float(v.imag)] for v in row] for row in a],
    }


def matrix_from_json(doc) -> np.ndarray:
    try:
        dim = int(doc["dim"])
        entries = doc["entries"]
        a = np.asarray(
            [[complex(e[0], e[1]) for e in row] for row in entries],
            dtype=np.complex128,
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise errors.ParseError(f"malformed matrix document: {exc}") from exc
    if a.shape != (dim, dim):
        raise errors.ParseError(
            f"matrix entries shape {a.shape} inconsistent with dim {dim}"
        )
    return a


def state_to_json(psi) -> dict:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return {
        "dim": len(psi),
        "amplitudes": [[float(v.real), float(v.imag)] for v in psi],
    }


def state_from_json(doc) -> np.ndarray:
    try:
        dim = int(doc["dim"])
        amps = np.asarray(
            [complex(e[0], e[1]) for e in doc["amplitudes"]], dtype=np.complex128
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise errors.ParseError(f"malformed state document: {exc}") from exc
    if len(amps) != dim:
        raise errors.ParseError(f"state length {len(amps)} != dim {dim}")
    return amps


_KINDS = {
    "hamiltonian-simulation",
    "matrix-polynomial",
    "ode-generic",
    "ode-fast-forward",
}


def problem_from_json(doc) -> ApplicationProblem:
    if not isinstance(doc, dict):
        raise errors.ParseError("problem document must be an object")
    kind = doc.get("kind")
    if kind not in _KINDS:
        raise errors.ParseError(f"unknown problem kind {kind!r}")
    try:
        matrix = matrix_from_json(doc["matrix"])
        state = state_from_json(doc["state"])
        epsilon = float(doc["epsilon"])
    except KeyError as exc:
        raise errors.ParseError(f"problem document missing field {exc}") from exc
    poly_coeffs = tuple(
        complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
        for c in doc.get("polyCoeffs", [])
    )
    b = state_from_json(doc["b"]) if doc.get("b") is not None else None
    c_doc = doc.get("contour")
    contour_obj = contour_mod.from_json(c_doc) if c_doc is not None else None
    observable = (
        matrix_from_json(doc["observable"]) if doc.get("observable") is not None else None
    )
    return ApplicationProblem(
        kind=kind,
        matrix=matrix,
        state=state,
        epsilon=epsilon,
        t=float(doc.get("T", 0.0)),
        poly_coeffs=poly_coeffs,
        b=b,
        contour_param_a=doc.get("contourParamA"),
        contour_override=contour_obj,
        observable=observable,
        xi2=float(doc.get("xi2", 0.1)),
    )


def problem_to_json(p: ApplicationProblem) -> dict:
    doc = {
        "kind": p.kind,
        "matrix": matrix_to_json(p.matrix),
        "state": state_to_json(p.state),
        "epsilon": p.epsilon,
        "T": p.t,
    }
    if p.poly_coeffs:
        doc["polyCoeffs"] = [[c.real, c.imag] for c in map(complex, p.poly_coeffs)]
    if p.b is not None:
        doc["b"] = state_to_json(p.b)
    if p.contour_param_a is not None:
        doc["contourParamA"] = p.contour_param_a
    if p.contour_override is not None:
        doc["contour"] = contour_mod.to_json(p.contour_override)
    if p.observable is not None:
        doc["observable"] = matrix_to_json(p.observable)
    if p.xi2 is not None:
        doc["xi2"] = p.xi2
    return doc


def load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise errors.ParseError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"invalid JSON in {path}: {exc}") from exc


def dump_json(doc, path=None) -> str:
    """Deterministic JSON: sorted keys, no whitespace drift."""
    text = json.dumps(doc, sort_keys=True, indent=2)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
    return text


def format_csv(rows, columns) -> str:
    """Deterministic CSV with 17-significant-digit floats."""
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            v = row[col]
            if isinstance(v, float):
                cells.append(f"{v:.17g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
