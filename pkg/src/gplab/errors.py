"""Shared exception types."""


class ValidationError(ValueError):
    """Rejected input: bad ranges, mismatched grids, broken preconditions."""


class MemoryGuardError(ValidationError):
    """Requested tensor would exceed the hard amplitude budget."""


class NumericalAbort(RuntimeError):
    """Propagation produced a non-finite value; carries the offending step."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step
