"""Exception types mapped onto CLI exit codes."""


class ValidationError(ValueError):
    """Invalid input, configuration or geometry (exit code 1)."""


class NumericalError(ArithmeticError):
    """Non-finite values during a computation (exit code 2)."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class PositionError(ValidationError):
    """A per-position failure, carrying the offending scan index."""

    def __init__(self, message, position_index):
        super().__init__(f"position {position_index}: {message}")
        self.position_index = position_index
