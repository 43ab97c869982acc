"""Exception types shared across the package."""


class GibbsGateError(Exception):
    """Base class for all package errors."""


class InvalidInput(GibbsGateError, ValueError):
    """Malformed or out-of-domain input.

    ``field`` names the offending input location when it is known, so the
    CLI can point at it.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class PreconditionViolation(InvalidInput):
    """Input is well formed but outside the domain of the construction."""


class UnsupportedAttackPair(GibbsGateError):
    """The gap ratio of a level pair is not rational, so no exact (p, q) exists."""


class LinearlyDependent(InvalidInput):
    """Integer lattice vectors do not span a full-rank sublattice."""


class NoLatticeRepresentation(GibbsGateError):
    """No integer vectors reproduce the system gaps within the search box."""


class ConstructionFailed(GibbsGateError):
    """A constructed environment state failed its own verification."""


class OracleRefused(GibbsGateError):
    """The brute-force oracle was asked to enumerate too many joint levels."""


class NumericError(GibbsGateError, ArithmeticError):
    """Floating point evaluation failed a sanity check."""


class CrossCheckFailure(GibbsGateError):
    """An emitted certificate failed its own exact re-check."""
