"""Exception hierarchy shared by every module of the package."""


class MagnonError(Exception):
    """Base class for all errors raised by :mod:`magnon`."""


class InvalidSpecError(MagnonError, ValueError):
    """A disorder or chain specification violates its invariants."""


class DegenerateSequenceError(MagnonError, ValueError):
    """A disorder sequence has zero variance or a degenerate spectrum."""


class InsufficientDataError(MagnonError, ValueError):
    """Too few samples for a meaningful estimate."""


class InvalidInputError(MagnonError, ValueError):
    """Bad indices, dimensions or time grids."""


class InvalidPairError(InvalidInputError):
    """A two-site quantity was requested with ``i == j``."""


class InvalidStateError(MagnonError, ValueError):
    """A density matrix is not a physical state."""


class BesselRangeError(MagnonError, ValueError):
    """Bessel order or argument outside the supported range."""


class NumericalFailure(MagnonError, RuntimeError):
    """An iterative method did not converge within its iteration cap."""


class BoundaryContaminationError(MagnonError, RuntimeError):
    """An evaluation window overlaps the arrival of the wavefront at the far boundary."""


class EnsembleError(MagnonError, RuntimeError):
    """A realization inside an ensemble failed; carries the offending seed."""

    def __init__(self, message: str, realization: int, seed: int):
        super().__init__(f"{message} (realization {realization}, seed {seed})")
        self.realization = realization
        self.seed = seed
