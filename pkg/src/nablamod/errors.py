"""Exception types shared across the package.

The split mirrors the three failure modes the command line distinguishes:
unusable input (:class:`InputError` and its parse subclass), a broken internal
contract (:class:`ContractError`), and a deliberately enforced size limit
(:class:`ResourceBoundError`).
"""

from __future__ import annotations


class NablamodError(Exception):
    """Base class for all errors raised by this package."""


class InputError(NablamodError):
    """An argument or input object violates a documented precondition."""


class ParseError(InputError):
    """A textual input (space, category, or lattice file) is malformed.

    Carries a 1-based line and column so the CLI can point at the offending
    token.
    """

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(message)
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.args[0]}"


class ContractError(NablamodError):
    """An operation was applied outside its stated domain.

    Example: transposing a category back into a left-continuous space when some
    hom value is not left-continuous.
    """


class ResourceBoundError(NablamodError):
    """A configured size bound (point count, carrier size) was exceeded."""
