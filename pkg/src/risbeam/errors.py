"""Exception types shared across the package."""


class DomainError(ValueError):
    """A quantity or operation was requested outside its valid domain."""


class InputFormatError(ValueError):
    """An input file could not be parsed; the message names the offending line."""
