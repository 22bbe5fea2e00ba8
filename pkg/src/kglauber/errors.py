"""Exception types callers are expected to branch on."""


class MaxTriesExceeded(RuntimeError):
    """Rejection sampler exhausted its try budget (miscalibrated cutoff)."""


class DepthExceeded(RuntimeError):
    """Recursive sampler hit the configured depth cap."""


class ConvergenceError(RuntimeError):
    """Iterative numerical routine failed to converge within its cap."""
