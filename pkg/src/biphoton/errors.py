"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input: violated precondition, malformed config, mismatched grids.

    ``field`` optionally names the offending configuration field
    (dotted path, e.g. ``"grid.dx"``).
    """

    def __init__(self, message: str, field: str | None = None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class PhysicsError(RuntimeError):
    """Run-time physics failure, e.g. a fully absorbing gating arm
    (zero coincidence rate) or a degenerate all-zero density."""
