"""Exception types shared across the package."""


class JadeError(Exception):
    """Base class for all package errors."""


class ValidationError(JadeError, ValueError):
    """Raised when a configuration or input violates its invariants."""


class EstimationError(JadeError, RuntimeError):
    """Raised when an estimation stage cannot produce a usable result.

    Carries the name of the pipeline stage that failed so callers can
    report where an end-to-end run broke down.
    """

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
