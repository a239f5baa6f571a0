"""Exception and warning types shared across the package."""


class QMFSError(Exception):
    """Base class for all package errors."""


class ConfigError(QMFSError, ValueError):
    """A configuration violates an invariant.

    Parameters
    ----------
    field : str
        Dotted path of the offending field, e.g. ``"pump_cavity.kappa_ext"``.
    message : str
        Human readable description.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InstabilityError(QMFSError):
    """The linearized dynamics have no steady state."""


class IllConditionedError(QMFSError):
    """A linear solve did not reach the required residual."""


class TransductionError(QMFSError):
    """The selected cavity carries no mechanical signal."""


class PeaksUnresolvedError(QMFSError):
    """A spectrum does not contain two peaks that can be fitted."""


class RegimeWarning(UserWarning):
    """Parameters fall outside the rotating-wave regime of the model."""


class PeaksOverlapWarning(UserWarning):
    """The two fitted peaks are closer than their linewidth."""
