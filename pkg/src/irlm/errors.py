"""Exception types shared across the package."""


class IrlmError(Exception):
    """Base class for all library errors."""


class ParameterError(IrlmError, ValueError):
    """Invalid argument: bad dimension, range, or malformed configuration."""


class ConstructionError(IrlmError):
    """A matrix construction cannot satisfy its sizing constraints."""


class DegenerateSpanError(IrlmError):
    """Input points do not span the ambient space."""


class RankDeficiencyError(IrlmError):
    """Not enough linearly independent vectors to satisfy a request."""


class NonconvergenceError(IrlmError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message: str, gap: float | None = None):
        super().__init__(message)
        self.gap = gap


class SizeCapError(IrlmError, ValueError):
    """Problem size exceeds the cap for certified exact computation."""


class FormatError(IrlmError):
    """Malformed, truncated, or oversized matrix file."""


class TraceAborted(IrlmError):
    """A proof trace hit a structural failure; names the step that failed."""

    def __init__(self, step: str, cause: Exception):
        super().__init__(f"trace aborted at step '{step}': {cause}")
        self.step = step
        self.cause = cause
