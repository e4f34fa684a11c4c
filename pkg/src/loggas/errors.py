"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` (the class name) so the
command line front end can serialize failures as JSON.
"""


class LogGasError(Exception):
    """Base class for all errors raised by :mod:`loggas`."""

    @property
    def code(self):
        return type(self).__name__


class DuplicatePoint(LogGasError, ValueError):
    pass


class BadLength(LogGasError, ValueError):
    pass


class AmplitudeTooLarge(LogGasError, ValueError):
    pass


class NearCoincidence(LogGasError, ValueError):
    pass


class NonpositiveDensity(LogGasError, ValueError):
    pass


class ZeroDefect(LogGasError, ValueError):
    pass


class ZeroGap(LogGasError, ValueError):
    pass


class MaxIterations(LogGasError, RuntimeError):
    pass


class OrderingCollapse(LogGasError, RuntimeError):
    pass


class AtCharge(LogGasError, ValueError):
    pass


class MeshTooCoarse(LogGasError, RuntimeError):
    pass


class WindowTooSmall(LogGasError, ValueError):
    pass


class QuadratureFailure(LogGasError, RuntimeError):
    pass


class Coincidence(LogGasError, ValueError):
    pass


class BadSchedule(LogGasError, ValueError):
    pass


class EmptyWindow(LogGasError, ValueError):
    pass


class SolverFailure(LogGasError, RuntimeError):
    pass


class ParseError(LogGasError, ValueError):
    pass
