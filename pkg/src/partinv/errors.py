"""Exception types shared across the package."""


class DimensionError(ValueError):
    """A vector or operator did not have the expected dimension."""

    def __init__(self, what, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected dimension {expected}, got {actual}")


class NonFiniteError(ValueError):
    """An input contained NaN or Inf."""


class InvariantViolation(RuntimeError):
    """An internal numerical guarantee failed (should never happen for finite input)."""
