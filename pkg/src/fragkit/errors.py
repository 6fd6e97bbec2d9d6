"""Exception types shared across the toolkit."""


class FragkitError(Exception):
    """Base class for all toolkit errors."""


class KernelError(FragkitError):
    """Invalid or unnormalizable kernel / daughter-law input."""


class MomentDivergenceError(KernelError):
    """A requested jump moment does not converge."""


class RangeError(FragkitError):
    """Evaluation outside the representable floating-point range."""


class DomainError(FragkitError):
    """Grid or domain too small for the requested evolution."""


class GridMismatchError(FragkitError):
    """Operation requires identical grids."""


class SchemeFailureError(FragkitError):
    """A conservation or positivity guarantee of a scheme was violated."""


class EmptyPopulationError(FragkitError):
    """Operation requires a non-empty population or positive mass."""


class EventCapError(FragkitError):
    """A stochastic trajectory exceeded its event budget."""


class TransformError(FragkitError):
    """Similarity transform undefined (non-positive diffusion)."""


class DegenerateModeError(FragkitError):
    """Eigenvalue cluster too close to pair left/right modes reliably."""

    def __init__(self, message, cluster=None):
        super().__init__(message)
        self.cluster = cluster


class OracleSizeError(FragkitError):
    """Dense oracle requested on a grid too large for it."""


class ConfigError(FragkitError):
    """Run-configuration file failed validation."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class CalibrationWarning(UserWarning):
    """Calibrated spectral parameters fall outside the confining regime."""


class StepSizeWarning(UserWarning):
    """Requested time step violated a stability bound and was reduced."""
