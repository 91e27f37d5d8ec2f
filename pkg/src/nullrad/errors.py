"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: numerical contract failures -> 1,
configuration problems -> 2, convergence failures -> 3.
"""


class NullradError(Exception):
    """Base class for all package errors."""


class InvalidGridError(NullradError):
    """Grid too small, non-uniform, or otherwise unusable."""


class GridMismatchError(NullradError):
    """Two objects that must share a grid do not."""


class DomainTooSmallError(NullradError):
    """Spatial extent cannot contain the domain of dependence."""


class ConfigurationError(NullradError):
    """Bad run configuration (unknown keys, CFL violation, bad values)."""


class BlowupError(NullradError):
    """Marching produced NaN/overflow; should not happen for defocusing data."""


class ResolutionError(NullradError):
    """Grid too coarse to resolve a required feature (e.g. the 1/R corner)."""


class StiffnessError(NullradError):
    """Inner fixed-point update failed to converge."""


class OutOfRangeError(NullradError):
    """Requested coordinate outside the representable range."""


class NonZeroMeanError(NullradError):
    """Radiation profile has nonzero even-part mean; not invertible to
    compactly supported data.  Carries the offending residual mean."""

    def __init__(self, message, residual_mean=0.0):
        super().__init__(message)
        self.residual_mean = residual_mean


class ConvergenceError(NullradError):
    """Outer iteration did not reach tolerance; carries residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
