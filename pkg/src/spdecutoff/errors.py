"""Exception types raised by the library.

Everything derives from :class:`SpdeCutoffError` so callers can catch one
base class at CLI boundaries.
"""


class SpdeCutoffError(Exception):
    """Base class for all library errors."""


class InvalidDomainError(SpdeCutoffError):
    """Box side lengths or mode counts are not positive."""


class InvalidTimeError(SpdeCutoffError):
    """A time argument is negative where only t >= 0 makes sense."""


class PointOutsideDomainError(SpdeCutoffError):
    """Evaluation point lies outside the closed box."""


class ZeroInitialDatumError(SpdeCutoffError):
    """An operation that needs a nonzero initial state received zero."""


class ResonanceError(SpdeCutoffError):
    """gamma^2 == 4*lambda_k within tolerance: the damped-wave mode matrix
    is not diagonalizable and the two-root decomposition breaks down."""


class DegenerateSpectrumError(SpdeCutoffError):
    """The wave construction requires a simple (tie-free) spectrum."""


class WrongCaseError(SpdeCutoffError):
    """Operation called on the wrong damping regime (overdamped helpers on
    purely oscillatory data, or vice versa)."""


class SubcriticalRouteError(WrongCaseError):
    """No overdamped content: use the oscillatory-window route instead of
    the single-leader profile route."""


class UnsupportedCombinationError(SpdeCutoffError):
    """Exact formulas unavailable for this (noise, p) combination; use the
    sampling estimators instead."""


class DegenerateNoiseError(SpdeCutoffError):
    """Noise parameters are internally inconsistent (e.g. compensation
    requested with no jump marks, or negative intensities)."""


class MarkOutOfRangeError(SpdeCutoffError):
    """Multiplicative jump mark violates the required size window."""


class ScheduleRejectedError(SpdeCutoffError):
    """A small-noise renormalization schedule fails its admissibility
    conditions on the supplied grid."""


class ConfigError(SpdeCutoffError):
    """Experiment configuration failed validation.

    The message carries a JSON-pointer-style path to the offending field.
    """

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")
