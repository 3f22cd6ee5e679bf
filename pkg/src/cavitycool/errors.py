"""Exception hierarchy."""


class CavityCoolError(Exception):
    """Base class for all errors raised by the package."""


class NonPositiveRate(CavityCoolError, ValueError):
    pass


class TrapDestabilized(CavityCoolError):
    """A modified trap frequency squared is not positive."""


class NoConvergence(CavityCoolError):
    pass


class InvalidStep(CavityCoolError, ValueError):
    pass


class DimensionMismatch(CavityCoolError, ValueError):
    pass


class EigenFailure(CavityCoolError):
    pass


class NotHurwitz(CavityCoolError):
    """The drift matrix has an eigenvalue with non-negative real part."""


class SolverSingular(CavityCoolError):
    pass


class NegativeOccupation(CavityCoolError):
    pass


class StepSizeUnderflow(CavityCoolError):
    pass


class WrongGeometry(CavityCoolError, ValueError):
    """Closed-form collective results need the base lattice."""


class StructureViolation(CavityCoolError):
    def __init__(self, message, entry=None, value=None):
        super().__init__(message)
        self.entry = entry
        self.value = value


class ConfigInvalid(CavityCoolError, ValueError):
    pass


class OutputUnwritable(CavityCoolError, OSError):
    pass


class ApproximationBreakdown(CavityCoolError):
    """Free-space losses too large for the linearized cavity model."""
