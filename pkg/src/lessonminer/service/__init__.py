"""HTTP coding service: durable store plus FastAPI application."""

from .app import create_app
from .store import CodingStore

__all__ = ["CodingStore", "create_app"]
