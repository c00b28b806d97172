"""Exception hierarchy shared by every module of the package."""


class SepicukError(Exception):
    """Base class for all domain errors."""


class ConfigError(SepicukError, ValueError):
    """A parameter set or scenario violates its preconditions."""


class DegenerateDuty(SepicukError, ValueError):
    """D + D0 >= 1, the gain denominator vanishes."""


class CcmViolation(SepicukError):
    """The operating point cannot be held in discontinuous conduction.

    ``D0`` carries the unclamped (negative) discontinuous fraction.
    """

    def __init__(self, message, D0=None):
        super().__init__(message)
        self.D0 = D0


class DutyOverflow(SepicukError):
    """Requested power needs a peak duty of one or more."""

    def __init__(self, message, d_peak=None):
        super().__init__(message)
        self.d_peak = d_peak


class InconsistentMode(SepicukError):
    """Gate signals and topology mode disagree."""


class NumericalDivergence(SepicukError):
    """A state magnitude left the physically plausible range."""


class WindowError(SepicukError, ValueError):
    """A sample window does not span an integer number of (half) cycles."""


class RangeError(SepicukError, ValueError):
    """A design quantity falls outside its admissible band."""


class EnergyMismatch(SepicukError):
    """Input power is not accounted for by output power and losses."""
