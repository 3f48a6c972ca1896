"""Exception types raised by edistill."""


class EdistillError(ValueError):
    """Base class for all input-validation errors in the package."""


class ShapeError(EdistillError):
    """Dimensions of an operator do not match the declared subsystem structure."""


class HermiticityError(EdistillError):
    """An operator that must be self-adjoint is not, beyond tolerance."""


class PSDError(EdistillError):
    """An operator that must be positive semidefinite has a negative eigenvalue."""


class TraceError(EdistillError):
    """A trace or completeness condition is violated."""


class RangeError(EdistillError):
    """A scalar argument lies outside its admissible range."""


class SupportError(EdistillError):
    """A support (invertibility) requirement between two operators fails."""


class StateFileError(EdistillError):
    """A state or instrument file could not be parsed."""
