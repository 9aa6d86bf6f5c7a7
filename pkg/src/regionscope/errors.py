"""Exception types shared across the toolkit."""


class DimensionMismatch(ValueError):
    """Operands have incompatible dimensions."""


class InputDimGuard(ValueError):
    """An enumeration was asked to run above its configured input-dimension guard."""


class FormatError(ValueError):
    """A structured text file is malformed.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConstructionError(RuntimeError):
    """A seeded construction exhausted its retry budget."""
