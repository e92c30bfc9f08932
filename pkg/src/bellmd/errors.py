"""Exception hierarchy.

Every error raised by the library derives from :class:`BellMDError` so that
callers (the CLI in particular) can map whole families to exit codes.
"""


class BellMDError(Exception):
    pass


class InvalidGrid(BellMDError, ValueError):
    pass


class DuplicateClass(BellMDError, ValueError):
    pass


class OutOfBounds(BellMDError, ValueError):
    pass


class InvalidCorrelation(BellMDError, ValueError):
    pass


class InvalidProbabilities(BellMDError, ValueError):
    pass


class MaxStepsExceeded(BellMDError, RuntimeError):
    pass


class TooLarge(BellMDError, ValueError):
    pass


class InconsistentBasins(BellMDError, ValueError):
    pass


class GridMismatch(BellMDError, ValueError):
    pass


class AxisMismatch(BellMDError, ValueError):
    pass


class OutOfRange(BellMDError, ValueError):
    pass


class InvariantBreach(BellMDError, AssertionError):
    pass


class InsufficientSamples(BellMDError, RuntimeError):
    pass


class ConfigError(BellMDError, ValueError):
    pass


class ConsistencyError(BellMDError, RuntimeError):
    pass


class GateFailure(BellMDError, RuntimeError):
    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("Monte Carlo gate(s) failed: " + ", ".join(self.failed))
