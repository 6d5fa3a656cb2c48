"""Exception types shared across the package."""


class FunggmError(Exception):
    """Base class for all package errors."""


class ParseError(FunggmError):
    """A CSV row could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MissingObservation(FunggmError):
    """An (subject, component, time) cell required by the design is absent."""


class GridMismatch(FunggmError):
    """Observation times do not form a single shared grid."""


class DimensionMismatch(FunggmError):
    """Objects that must share a dimension do not."""


class NumericalError(FunggmError):
    """A numerical operation produced non-finite or singular results."""


class DegenerateSpectrum(FunggmError):
    """All eigenvalues are zero; truncation selection is undefined."""


class DegenerateVariance(FunggmError):
    """A score variance is numerically zero; the basis is too large for the data."""

    def __init__(self, message: str, basis_index: int | None = None,
                 component: int | None = None):
        super().__init__(message)
        self.basis_index = basis_index
        self.component = component


class DegenerateTruth(FunggmError):
    """The reference edge set is empty or complete; rates are undefined."""


class RangeError(FunggmError):
    """A coordinate lies outside its admissible range."""
