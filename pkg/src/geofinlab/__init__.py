"""Numerical toolkit for hyperbolic and arithmetic geometry experiments:
geometry kernels, a quadratic-form lattice enumerator, a Cantor avoidance
sampler, leafwise entropy chains and a Margulis-function harness."""

from .errors import (
    ConfigurationError,
    DegenerateConfigurationError,
    DomainError,
    GenerationFailure,
    GeofinlabError,
    InvariantViolation,
    ResourceError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateConfigurationError",
    "DomainError",
    "GenerationFailure",
    "GeofinlabError",
    "InvariantViolation",
    "ResourceError",
]
