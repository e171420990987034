"""Exception types shared across the package."""


class QuadboundError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(QuadboundError):
    """An input vector or matrix has an inconsistent shape."""


class WrongDimension(DimensionMismatch):
    """Operation requires a specific state dimension (e.g. n=2)."""


class InvalidDimension(QuadboundError):
    """State dimension outside the supported range (n >= 2)."""


class NotSymmetric(QuadboundError):
    """A matrix required to be symmetric is materially asymmetric."""


class NotEnergyPreserving(QuadboundError):
    """Quadratic terms violate the lossless index-symmetry constraint."""

    def __init__(self, msg, triple=None, residual=None):
        super().__init__(msg)
        self.triple = triple
        self.residual = residual


class InconsistentParameterization(QuadboundError):
    """2D quadratic terms do not match the two-parameter lossless family."""


class TrivialNonlinearity(QuadboundError):
    """The quadratic terms vanish; the 2D canonical form is undefined."""


class NotApplicable(QuadboundError):
    """Requested certificate does not apply to this parameter regime."""


class NotThreeDimensional(QuadboundError):
    """Quartic certificate verification supports 3-state systems only."""


class UnboundedBelow(QuadboundError):
    """Eigenvalue objective diverged to -inf (impossible for valid systems)."""


class MaxIterations(QuadboundError):
    """Iteration budget exhausted without meeting the requested tolerance."""


class ParseError(QuadboundError):
    """System/certificate text file is malformed."""

    def __init__(self, msg, line=None, col=None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(loc + msg)
        self.line = line
        self.col = col
