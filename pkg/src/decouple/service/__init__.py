"""HTTP service wrapping the package operations."""

from .app import create_app

__all__ = ["create_app"]
