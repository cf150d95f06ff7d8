"""Brownian cover times on the unit torus: multi-scale excursion machinery and experiments."""

from .errors import ConfigError, DomainError, TruncationError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DomainError", "TruncationError", "__version__"]
