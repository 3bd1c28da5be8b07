"""Exception types raised by the simulation and analysis routines."""


class QfoscError(Exception):
    """Base class for all package errors."""


class NonFiniteState(QfoscError, FloatingPointError):
    """The oscillator state became NaN or infinite.

    Attributes
    ----------
    t : float or None
        Nondimensional time at which the bad state was produced.
    v0 : float or None
        Initial velocity of the run, set by sweeps so the offending grid
        point can be identified.
    """

    def __init__(self, message, t=None, v0=None):
        super().__init__(message)
        self.t = t
        self.v0 = v0

    def __str__(self):
        msg = super().__str__()
        if self.t is not None:
            msg += f" (t={self.t!r})"
        if self.v0 is not None:
            msg += f" (v0={self.v0!r})"
        return msg


class EmptySeries(QfoscError, ValueError):
    """A time series with no samples was passed where data is required."""


class SignChange(QfoscError, ValueError):
    """The deviation from the ground level changed sign inside a fit window."""


class DegenerateInput(QfoscError, ValueError):
    """Too few points, or points without spread, for a least-squares fit."""


class NoTransitions(QfoscError):
    """No level was ever left during a lifetime study.

    The (censored) records are kept on the exception so callers can still
    report them.
    """

    def __init__(self, message, records=()):
        super().__init__(message)
        self.records = list(records)
