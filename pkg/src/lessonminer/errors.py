"""Shared exception hierarchy for the pipeline."""

from __future__ import annotations


class LessonMinerError(Exception):
    """Base class for all pipeline errors; carries a stable error code."""

    code = "Error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "details": self.details}
