"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """An input file or in-memory structure violates a format contract."""


class CycleError(ValidationError):
    """The parent relation of a concept hierarchy contains a cycle."""


class TrainingGateError(RuntimeError):
    """Training finished below the required test-accuracy gate."""

    def __init__(self, message: str, accuracy: float):
        super().__init__(message)
        self.accuracy = accuracy
