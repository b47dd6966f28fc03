"""
Exception types raised by the simulator and the localization schemes.
"""


class SquintLocError(Exception):
    """Base class for every error raised by squintloc."""


class ConfigError(SquintLocError):
    """Run or system configuration could not be parsed or validated."""


class SubcarrierIndexError(SquintLocError, ValueError):
    """Subcarrier index outside 0..M."""


class OutOfTrajectory(SquintLocError):
    """Closed-form squint point does not exist for this start/end pair."""


class InvalidFeedback(SquintLocError):
    """User feedback frequency lies outside the configured band."""


class NonPositiveDistance(SquintLocError):
    """Distance inversion produced 1/r <= 0."""


class AmbiguousDistance(SquintLocError):
    """The two highest peaks of the distance objective are too close to call."""

    def __init__(self, message: str, peaks=None):
        super().__init__(message)
        self.peaks = peaks or []


class DegenerateGeometry(SquintLocError):
    """Double-BS triangulation is singular (user near the baseline axis)."""


class EmptyCellError(SquintLocError, ValueError):
    """RMSE requested for a cell without usable trial records."""
