"""Exception types raised by the solvers."""


class MflabError(Exception):
    """Base class for all solver-level failures."""


class DivergenceError(MflabError):
    """A coordinate became non-finite during time integration."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class CausticError(MflabError):
    """The Lagrangian flow map lost invertibility (Jacobian below threshold).

    ``report`` carries the :class:`~mflab.kinetic.CausticReport`; ``field``
    holds the last state computed before the threshold was crossed, when the
    raising solver has one.
    """

    def __init__(self, message, report=None, field=None):
        super().__init__(message)
        self.report = report
        self.field = field


class ResolutionError(MflabError):
    """A grid is too coarse for the requested computation."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class AliasingError(MflabError):
    """Phase-space mass reaches the edge of the velocity grid."""
