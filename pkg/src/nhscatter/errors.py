"""Exception and warning types raised across the package."""


class NHScatterError(Exception):
    """Base class for all package errors."""


class SpectralSingularityError(NHScatterError, ArithmeticError):
    """Scattering amplitudes diverge at a real wave number."""


class NearSingularSystemError(NHScatterError, ArithmeticError):
    """The boundary-value linear system is numerically singular."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class PolesAtInfinityError(NHScatterError):
    """The pole polynomial degenerates and every pole sits at -i*infinity."""


class NoCriticalPointError(NHScatterError):
    """No pole enters the first quadrant within the swept parameter range."""


class ExceptionalPointError(NHScatterError):
    """The biorthogonal eigenbasis is unusable (near an exceptional point)."""


class FitQualityError(NHScatterError):
    """A regression did not reach the required goodness of fit."""


class NotLocalizedError(NHScatterError):
    """A wave-function snapshot is not dominated by a localized state."""


class InstabilityError(NHScatterError):
    """The explicit time stepper blew up."""


class ConfigError(NHScatterError):
    """A run configuration could not be parsed or validated.

    ``line`` and ``column`` (1-based) locate the offending entry when known.
    """

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class DegreeCollapseWarning(UserWarning):
    """The pole polynomial lost degree; fewer poles than usual are returned."""


class ExceptionalPointWarning(UserWarning):
    """Eigenvectors are nearly parallel; the biorthogonal expansion is ill-conditioned."""
