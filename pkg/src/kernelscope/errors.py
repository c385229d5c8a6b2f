"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: domain/validation problems exit 1,
capacity/precision problems exit 2.
"""


class KernelscopeError(Exception):
    """Base class for all package-specific errors."""


class DomainError(KernelscopeError):
    """Argument outside the mathematical domain of the operation."""


class PoleError(DomainError):
    """Evaluation requested exactly at a pole."""


class RangeError(KernelscopeError):
    """A requested index walks off the end of the available data."""


class CapacityError(KernelscopeError):
    """Work refused: table too short, bound too large, or int64 would overflow."""


class PrecisionError(KernelscopeError):
    """Requested tolerance unreachable inside the working range."""


class VerdictError(KernelscopeError):
    """An operation required a saturated/finite verdict it did not get."""


class ConstructionError(KernelscopeError):
    """An internal consistency check failed while building an object."""


class ContourError(KernelscopeError):
    """An argument-principle contour passed too close to a zero."""


class ExhaustionError(KernelscopeError):
    """A reliable comparison window shrank below the required minimum."""
