"""Exception hierarchy with stable error codes for the CLI.

Exit-code contract: 0 ok, 2 parse, 3 precondition, 4 numerical, 5 internal.
"""


class QContourError(Exception):
    """Base class; subclasses pin a category used by the CLI error records."""

    category = "internal"
    exit_code = 5

    def record(self):
        return {
            "code": self.exit_code,
            "category": self.category,
            "type": type(self).__name__,
            "message": str(self),
        }


class ParseError(QContourError):
    category = "parse"
    exit_code = 2


class PreconditionError(QContourError):
    category = "precondition"
    exit_code = 3


class NumericalError(QContourError):
    category = "numerical"
    exit_code = 4


# -- numkit --------------------------------------------------------------

class NonDiagonalizable(NumericalError):
    """Eigenvector-matrix condition number exceeds the configured cap."""


class FunctionSingularAtEigenvalue(PreconditionError):
    pass


class SingularResolvent(NumericalError):
    """z is numerically on the spectrum: sigma_min below machine scale."""


class UnreachableKappa(PreconditionError):
    pass


# -- contour -------------------------------------------------------------

class EmptyRegion(PreconditionError):
    pass


class DegenerateChord(PreconditionError):
    """Truncation line tangent to the disk boundary."""


class ContourNotEnclosing(PreconditionError):
    pass


# -- quadrature ----------------------------------------------------------

class NonFiniteSample(NumericalError):
    pass


class NodeOnSpectrum(NumericalError):
    def __init__(self, k, message=None):
        super().__init__(message or f"quadrature node {k} lies on the spectrum")
        self.k = k


class NodeBudgetOverflow(NumericalError):
    """select_M would exceed the configured node cap."""


# -- polyapprox ----------------------------------------------------------

class DegreeCapExceeded(NumericalError):
    pass


class CertificationFailed(NumericalError):
    pass


class NormExceedsOne(PreconditionError):
    pass


class SingularValueOutOfRange(PreconditionError):
    def __init__(self, k, sigma, lo, hi):
        super().__init__(
            f"singular value {k} = {sigma!r} outside [{lo!r}, {hi!r}]"
        )
        self.k = k
        self.sigma = sigma


# -- blockenc ------------------------------------------------------------

class AlphaTooSmall(PreconditionError):
    pass


class VerificationFailed(NumericalError):
    pass


class DimensionMismatch(PreconditionError):
    pass


class ZeroSuccessProbability(NumericalError):
    pass


class EpsilonOutOfRange(PreconditionError):
    pass


# -- sampler -------------------------------------------------------------

class NotHermitian(PreconditionError):
    pass


class HypothesisViolated(PreconditionError):
    pass


# -- apps ----------------------------------------------------------------

class StabilityViolated(PreconditionError):
    pass


class SingularMatrix(PreconditionError):
    """A is numerically singular; the inhomogeneous path needs A^{-1} b."""


class MissingParameter(PreconditionError):
    pass


# -- cli -----------------------------------------------------------------

class UnknownStudy(PreconditionError):
    pass
