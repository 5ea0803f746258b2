"""Exception types shared across the toolkit."""


class DhashError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(DhashError, ValueError):
    """An input violates a precondition (shape, range, finiteness)."""


class ParseError(DhashError, ValueError):
    """A file could not be parsed."""


class NumericError(DhashError, ArithmeticError):
    """A linear solve failed or left an unacceptable residual.

    Carries the name of the optimization step that failed so drivers can
    report it.
    """

    def __init__(self, step: str, message: str):
        self.step = step
        super().__init__(f"{step}: {message}")


class CorruptModelError(DhashError):
    """A persisted model file failed checksum or structural validation."""
