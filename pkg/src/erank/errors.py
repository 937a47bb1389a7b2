"""Exception hierarchy shared by all erank modules."""

from __future__ import annotations


class ErankError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ErankError):
    """Syntax error in formula, term, or element text."""

    def __init__(self, message: str, line: int = 1, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class NonExistentialError(ErankError):
    """An operation that requires an existential formula got something else."""


class ProfileError(ErankError):
    """Unsupported or inconsistent field profile for the requested operation."""


class CapExceededError(ErankError):
    """An enumeration or rewriting step exceeded its configured size cap."""


class PassError(ErankError):
    """A rewriting pass was applied to input violating its precondition."""


class EvalError(ErankError):
    """Evaluation failed, e.g. a variable or constant has no assigned value."""
