"""Exception types shared across the package."""


class GrflabError(Exception):
    """Base class for all package-specific errors."""


class NonSPDMetric(GrflabError):
    """Metric failed a symmetric-positive-definite check."""

    def __init__(self, message, min_det=None):
        super().__init__(message)
        self.min_det = min_det


class NonFinite(GrflabError):
    """A field contains NaN or Inf entries."""


class StepRejected(GrflabError):
    """A time step produced an invalid state (non-finite or non-SPD).

    Carries the last accepted state and any diagnostics rows collected so
    far, so a driver can flush partial output before giving up.
    """

    def __init__(self, message, state=None, rows=None):
        super().__init__(message)
        self.state = state
        self.rows = rows if rows is not None else []


class NoConvergence(GrflabError):
    """An iterative solver did not reach its tolerance."""


class ParseError(GrflabError):
    """A config line could not be parsed."""

    def __init__(self, line_no, reason):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class ValidationError(GrflabError):
    """A config key has a missing, unknown or out-of-range value."""

    def __init__(self, key, reason):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


class FormatError(GrflabError):
    """A checkpoint file is not in the expected binary format."""


class TruncatedFile(FormatError):
    """A checkpoint file ended before all payload bytes were read."""
