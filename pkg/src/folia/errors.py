"""Exception hierarchy shared by the whole package.

Two fault classes matter to callers: bad input (reject early, exit code 2
in the CLI) and numeric failure (a computation that started from valid
input but could not meet its contract, exit code 3).
"""

from __future__ import annotations


class FoliaError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FoliaError):
    """Invalid input: malformed text, wrong shapes, unsupported data."""


class ParseError(InputError):
    """Syntax error in a polynomial expression.

    Carries the byte offset of the first offending character so callers
    can point at it.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class NumericError(FoliaError):
    """A numeric routine failed to meet its accuracy or closure contract."""
