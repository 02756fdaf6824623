"""Contour-integral matrix functions on quantum-circuit primitives.

Computes f(A)|psi> by discretizing the Cauchy integral into a weighted sum
of resolvents, realizes the sum as a statevector-exact block-encoding /
LCU circuit with the inverse applied through an odd singular-value
polynomial, and estimates observables with a qubit-efficient randomized
sampler.  Application drivers cover Hamiltonian simulation, matrix
polynomials and linear ODEs, with literal resource-formula evaluation.
"""

from ._backend import BACKEND
from . import apps, blockenc, contour, errors, numkit, polyapprox, quadrature, sampler

__all__ = [
    "BACKEND",
    "apps",
    "blockenc",
    "contour",
    "errors",
    "numkit",
    "polyapprox",
    "quadrature",
    "sampler",
]

__version__ = "0.1.0"
