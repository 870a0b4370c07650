"""Exception types shared across the package."""


class PdcStoreError(Exception):
    """Base class for all errors raised by this package."""


class TruncationError(PdcStoreError, ValueError):
    """Fock-space truncation too small for the requested state."""


class OutOfModelError(PdcStoreError, ValueError):
    """Input outside the regime the model describes."""


class IntegrationUnstableError(PdcStoreError, ValueError):
    """Time step too large for the propagator.

    ``max_step`` carries the largest step the solver accepts.
    """

    def __init__(self, message, max_step):
        super().__init__(message)
        self.max_step = max_step


class ConfigurationError(PdcStoreError, ValueError):
    """Invalid scenario or detection configuration."""


class InsufficientStatisticsError(PdcStoreError, ValueError):
    """Counts too small to form an estimate; ``counts`` holds the raw values."""

    def __init__(self, message, counts):
        super().__init__(message)
        self.counts = counts


class CalibrationInfeasibleError(PdcStoreError, ValueError):
    """Calibration targets cannot be reached; ``closest`` is the best point found."""

    def __init__(self, message, closest=None):
        super().__init__(message)
        self.closest = closest
