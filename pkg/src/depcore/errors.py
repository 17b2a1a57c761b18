"""Exception hierarchy shared by the parser and both engines."""

from __future__ import annotations


class DepcoreError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DepcoreError):
    """Source text does not conform to the grammar."""

    def __init__(self, message: str, filename: str, line: int, col: int):
        super().__init__(f"{filename}:{line}:{col}: {message}")
        self.filename = filename
        self.line = line
        self.col = col


class UnboundVariableError(ParseError):
    """A variable occurs free in a parsed program."""

    def __init__(self, name: str, filename: str, line: int, col: int):
        super().__init__(f"unbound variable '{name}'", filename, line, col)
        self.name = name


class EvalTypeError(DepcoreError):
    """The concrete evaluator got stuck on an ill-typed operation."""


class ResourceError(DepcoreError):
    """A step budget or fixpoint iteration cap was exceeded."""
