"""One-shot entanglement distillation: entropic quantities, smoothing, bounds and protocols.

Conventions: logarithms are base 2; for a bipartite operator the first
subsystem is Alice's (``A``) and all remaining subsystems are Bob's (or the
environment's).
"""

from edistill.errors import (EdistillError, HermiticityError, PSDError, RangeError, ShapeError,
                             StateFileError, SupportError, TraceError)
from edistill.states import DensityOp, Instrument, LocalMap, PureVector

__version__ = "0.1.0"

__all__ = [
    "DensityOp", "PureVector", "Instrument", "LocalMap",
    "EdistillError", "ShapeError", "HermiticityError", "PSDError", "TraceError",
    "RangeError", "SupportError", "StateFileError",
]
