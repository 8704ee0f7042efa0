from __future__ import annotations


class QProcError(Exception):
    """Base class for diagnostics that point at a source location."""

    def __init__(self, message: str, pos: tuple[int, int] | None = None):
        super().__init__(message)
        self.message = message
        self.pos = pos

    def format(self, filename: str = "<input>") -> str:
        line, col = self.pos if self.pos else (1, 1)
        return f"{filename}:{line}:{col}: {self.message}"


class ParseError(QProcError):
    pass


class ElaborationError(QProcError):
    pass
