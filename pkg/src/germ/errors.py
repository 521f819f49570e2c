"""Shared error types."""

from __future__ import annotations


class ResourceLimitError(RuntimeError):
    """An exact enumeration would exceed its evaluation budget."""
