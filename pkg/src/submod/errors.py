"""Exception types shared by every solver module."""


class SubmodError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SubmodError, ValueError):
    """Malformed or out-of-range input."""


class ParseError(InputError):
    """An instance file could not be parsed.

    ``line`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BudgetError(SubmodError):
    """A requested computation exceeds a configured enumeration or iteration budget."""


class ContractError(SubmodError, AssertionError):
    """An internal guarantee failed; indicates a broken oracle or a bug."""
