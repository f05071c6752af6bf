"""Exception hierarchy for the adapter.

Every error that can surface through the HTTP layer carries a stable class
name; the service reports ``type(exc).__name__`` in the response body, so
renaming a class here is a wire-visible change.
"""
from __future__ import annotations

__all__ = [
    "AdapterError",
    "ConfigError",
    "SchemaViolation",
    "UnknownWeight",
    "ModeMismatch",
    "ClassCountMismatch",
    "DecodeFailure",
]


class AdapterError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(AdapterError):
    """Hosting manifest is missing, malformed, or internally inconsistent."""


class SchemaViolation(AdapterError):
    """Request body is not valid JSON or misses a required field."""


class UnknownWeight(AdapterError):
    """Requested weight_id is not hosted."""


class ModeMismatch(AdapterError):
    """Requested mode contradicts the hosted model's mode."""


class ClassCountMismatch(AdapterError):
    """Requested class_count contradicts the hosted model's class count."""


class DecodeFailure(AdapterError):
    """Image bytes could not be decoded as a raster image."""
