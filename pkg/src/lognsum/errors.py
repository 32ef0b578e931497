"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """An iteration failed to converge; ``last`` holds the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class InsufficientSampleError(ValueError):
    """Too few replications to form an estimate (and its variance)."""


class SamplerCapError(RuntimeError):
    """Acceptance-rejection exceeded its proposal budget for a single draw."""
