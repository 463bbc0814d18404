"""Shared exception type for input and validation failures."""


class AnomscopeError(ValueError):
    """Raised when an input, configuration, or model file is invalid.

    The command line tool maps this to exit code 1 (bad input). Any other
    exception that escapes is treated as an internal error and exits with 2.
    """
