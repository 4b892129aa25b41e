"""Exception hierarchy for nlslab."""


class NlsLabError(Exception):
    """Base class for all errors raised by this package."""


class AliasingError(NlsLabError):
    """A grid is too coarse to represent the requested band-limited field."""


class NearResonanceError(NlsLabError):
    """A correction denominator is too close to zero."""


class DivergenceError(NlsLabError):
    """The mode ODE integrator produced a non-finite state."""

    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"non-finite state at t={self.t:.6g}")


class BlowupError(NlsLabError):
    """The PDE solver produced NaN or Inf."""

    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"solution became non-finite at t={self.t:.6g}")


class AccuracyError(NlsLabError):
    """A conserved quantity drifted beyond the accepted tolerance."""


class ConsistencyError(NlsLabError):
    """Two routes to the same quantity disagree beyond tolerance."""


class InfeasibleError(NlsLabError):
    """No admissible parameters exist under the desk-scale caps.

    ``required_log2_n`` is the base-2 logarithm of the smallest frequency that
    would satisfy every condition (it can be far too large for an int).
    """

    def __init__(self, message, required_log2_n=None, details=None):
        super().__init__(message)
        self.required_log2_n = required_log2_n
        self.details = details or {}


class ConfigError(NlsLabError):
    """Malformed configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
