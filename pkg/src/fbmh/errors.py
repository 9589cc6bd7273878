"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the range where an operation is defined."""


class NonConvergence(RuntimeError):
    """Adaptive quadrature exhausted its budget above the requested tolerance."""

    def __init__(self, message, component=None):
        if component is not None:
            message = f"[{component}] {message}"
        super().__init__(message)
        self.component = component


class PoleAtThreeQuarters(DomainError):
    """sigma_H^2 (and everything built on it) has a pole at H = 3/4."""


class EmbeddingFailure(RuntimeError):
    """Neither circulant embedding nor the dense factorization produced a valid sampler."""


class TailWarning(UserWarning):
    """A truncated improper integral is missing more than the allowed tail fraction."""
