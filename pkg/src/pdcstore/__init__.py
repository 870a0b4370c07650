"""Storage of nonclassical PDC light in an EIT medium: simulation and witnesses."""

from .errors import (
    CalibrationInfeasibleError,
    ConfigurationError,
    InsufficientStatisticsError,
    IntegrationUnstableError,
    OutOfModelError,
    PdcStoreError,
    TruncationError,
)

__version__ = "0.1.0"
