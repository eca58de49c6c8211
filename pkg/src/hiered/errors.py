"""Exception hierarchy shared by all pipeline stages.

The CLI maps these onto exit codes: ValidationError -> 1, OSError -> 2,
NumericalError -> 3.
"""


class HedError(Exception):
    pass


class ValidationError(HedError, ValueError):
    """Malformed input: bad file contents, inconsistent shapes, bad config."""


class WavFormatError(ValidationError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class NumericalError(HedError, ArithmeticError):
    """Non-finite values, divergence, undefined ratios."""
