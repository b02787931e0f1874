"""Exception hierarchy.

Errors split into two families so the command line can map them onto exit
codes: :class:`UsageError` (bad input, exit 64) and :class:`NumericalError`
(a computation could not be carried out, exit 70).
"""


class CorrGeomError(Exception):
    """Base class for all package errors."""


class UsageError(CorrGeomError, ValueError):
    pass


class NumericalError(CorrGeomError, ArithmeticError):
    pass


class InvalidOperator(UsageError):
    pass


class DimMismatch(UsageError):
    pass


class NotUnitary(UsageError):
    pass


class InvalidArgs(UsageError):
    pass


class Undersampled(UsageError):
    pass


class MissingJet(UsageError):
    pass


class InvalidDiffeo(UsageError):
    pass


class InvalidEmbedding(UsageError):
    pass


class EmptyBall(UsageError):
    pass


class FormNotCovariant(UsageError):
    pass


class Unsupported(UsageError):
    pass


class ParseError(UsageError):
    """Malformed model, geometry or verdict file."""


class NumericalFailure(NumericalError):
    pass


class DegenerateSystem(NumericalError):
    """Reference system whose Gram matrix has rank zero."""


class AmbiguousSeaCut(NumericalError):
    """Lattice eigenvalues at the sea boundary are degenerate."""
