"""Divisorial stability invariants for polarized log pairs on curves, surfaces and toric varieties."""
from .errors import ConfigError, ConsistencyError, DegenerateInput, DomainError, PositivityError, SchemaError
from .numclass import NumClass

__version__ = "0.1.0"
