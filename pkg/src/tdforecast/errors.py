"""Exception types shared across the package."""


class TdforecastError(Exception):
    """Base class for all package errors."""


class InputError(TdforecastError):
    """Bad input data or files (CLI exit code 2)."""


class SchemaError(InputError):
    """Required columns or keys are missing from an input file."""


class ParseError(InputError):
    """A cell could not be parsed; the message names the offending row."""


class ValidationError(InputError):
    """Values violate a documented invariant (negative counts, NaN, ...)."""


class EmptyResultError(TdforecastError):
    """An operation produced no usable result (CLI exit code 3)."""


class FitError(TdforecastError):
    """Model estimation could not be carried out on the given data."""
