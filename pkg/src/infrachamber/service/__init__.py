"""HTTP service exposing the chamber experiments."""

from .app import create_app

__all__ = ["create_app"]
