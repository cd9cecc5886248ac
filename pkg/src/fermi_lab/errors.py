"""Exception types shared across the package."""

from __future__ import annotations


class CapacityError(RuntimeError):
    """Raised when a truncation target cannot be met within the level cap."""


class ConfigError(ValueError):
    """Raised for malformed experiment configurations."""
