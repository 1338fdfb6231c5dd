"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError -> 1, NumericError -> 2,
I/O errors -> 3.
"""


class ValidationError(ValueError):
    """Invalid input: a spec, config field or argument failed validation."""


class NumericError(RuntimeError):
    """A numerical procedure failed (factorization, eigen gap collapse, ...)."""
