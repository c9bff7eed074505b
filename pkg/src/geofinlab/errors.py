"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``DomainError`` and its subclasses are
validation failures (exit 2), ``ResourceError`` is exit 3.
"""


class GeofinlabError(Exception):
    """Base class for all package errors."""


class DomainError(GeofinlabError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateConfigurationError(DomainError):
    """Coincident points, intersecting lines and similar degenerate input."""


class ConfigurationError(DomainError):
    """An object (family, chain, source) violates its construction invariants."""


class InvariantViolation(GeofinlabError, AssertionError):
    """A property that the theory guarantees was observed to fail."""


class GenerationFailure(GeofinlabError, RuntimeError):
    """A randomized generator gave up after its retry budget."""


class ResourceError(GeofinlabError, RuntimeError):
    """Requested computation exceeds a configured size cap."""
