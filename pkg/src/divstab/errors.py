"""Error classes shared by every backend.

The CLI maps them onto exit codes: DomainError -> 1, SchemaError -> 2,
ConsistencyError -> 3.
"""


class DomainError(ValueError):
    """Input is well formed but outside the domain of the operation."""

    exit_code = 1


class PositivityError(DomainError):
    """A class failed an ampleness / bigness test."""


class DegenerateInput(DomainError):
    pass


class ConfigError(DomainError):
    """Model data is insufficient for the requested computation."""


class SchemaError(ValueError):
    """A model or job file violates its schema or a load-time invariant."""

    exit_code = 2


class ConsistencyError(RuntimeError):
    """Two independent routes to the same quantity disagree."""

    exit_code = 3
