"""Numerical checks of semiclassical spectra, resolvents and semigroup decay
for -h^2 Laplacian + iV with Dirichlet conditions."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    EigenvalueHitError,
    InfeasibleResolutionError,
    InstabilityError,
    NumericalError,
    ParseError,
    RegimeError,
    SemispecError,
    StripViolationError,
)
from .potentials import Interval, PotentialProfile, Rectangle, predicted_limit  # noqa: E402

__all__ = [
    "__version__", "ConfigError", "EigenvalueHitError", "InfeasibleResolutionError", "InstabilityError",
    "NumericalError", "ParseError", "RegimeError", "SemispecError", "StripViolationError", "Interval",
    "PotentialProfile", "Rectangle", "predicted_limit",
]
