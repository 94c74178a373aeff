"""Exception hierarchy shared across the package."""


class RestrictMLError(ValueError):
    """Base class for data and validation errors (CLI exit code 2)."""


class FastaFormatError(RestrictMLError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EnzymeTableError(RestrictMLError):
    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class UndefinedInputError(RestrictMLError):
    """A formula was asked to evaluate on an empty sequence."""


class InsufficientLengthError(RestrictMLError):
    pass


class WidthOverflowError(RestrictMLError):
    pass


class CapacityError(RestrictMLError):
    """A split asked for more entries of a class than the pool holds."""

    def __init__(self, message: str, short_class: str):
        super().__init__(message)
        self.short_class = short_class


class InsufficientDataError(RestrictMLError):
    pass


class SchemaError(RestrictMLError):
    pass


class DimensionMismatchError(RestrictMLError):
    pass


class UndefinedRateError(RestrictMLError):
    def __init__(self, message: str, klass: str):
        super().__init__(message)
        self.klass = klass
