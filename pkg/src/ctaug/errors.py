"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """A precondition, invariant, or spec-document violation.

    The CLI maps this to exit code 2; genuine I/O failures (OSError) map to 3
    and anything else to 4.
    """


class UnitsError(ValidationError):
    """Operation applied to a volume with the wrong intensity units."""


class ShapeMismatchError(ValidationError):
    """Paired arrays/volumes do not share a shape."""
