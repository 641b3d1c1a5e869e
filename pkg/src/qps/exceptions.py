"""Exception types raised across the toolkit."""


class QPSError(Exception):
    """Base class for every error raised by :mod:`qps`."""


class DimensionMismatch(QPSError, ValueError):
    """Operands live on spaces of different dimension."""


class NotNormalized(QPSError, ValueError):
    """A state that must be normalized is not."""


class NotHermitian(QPSError, ValueError):
    """An operator that must be Hermitian is not."""


class ParityError(QPSError, ValueError):
    """Operation only defined for odd dimension."""


class TruncationError(QPSError, ValueError):
    """Coherent amplitude too large for the Fock cutoff."""


class OrthogonalPostSelection(QPSError, ZeroDivisionError):
    """Post-selected state (numerically) orthogonal to the pre-selected one.

    The weak value diverges; it is never clipped.
    """


class DegenerateGeometry(QPSError, ValueError):
    """Orthogonal rays where a phase is required, or a bad chart point."""


class CoprimalityError(QPSError, ValueError):
    """CRT relabelling requested for non-coprime factors."""
