"""Exception and warning types shared across the package."""


class OsstabError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(OsstabError):
    """A profile or solver parameter is outside its admissible range."""


class InvalidSizeError(OsstabError):
    """Grid size or map scale is inadmissible."""


class DivergentIntegralError(OsstabError):
    """An exponentially weighted quadrature does not converge on the grid.

    Signals that the decay of the integrand is too slow for the requested
    exponential weight (alpha too large for the data).
    """


class EnvelopeExceededError(OsstabError):
    """Argument lies outside the documented validity envelope."""


class ResolutionInsufficientError(OsstabError):
    """The grid cannot resolve the requested boundary-layer scale."""


class SingularSystemError(OsstabError):
    """A discrete operator is numerically singular.

    Carries a reciprocal-condition estimate when available.
    """

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class CompatibilityError(OsstabError):
    """Source data violates a boundary compatibility condition."""


class DegenerateDenominatorError(OsstabError):
    """The fast/slow matching denominator fell below its scaling floor."""


class OverlapMismatchError(OsstabError):
    """Corrector path and direct path disagree in the overlap band."""


class SpectralConditionUnverifiedError(OsstabError):
    """A solve requires gap-open evidence that has not been supplied."""


class NoConvergenceError(OsstabError):
    """A fixed-point iteration failed to converge.

    The per-iteration residual history is attached for diagnosis.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class TruncationWarning(UserWarning):
    """Mode-truncation tail of a convolution exceeded its tolerance."""
