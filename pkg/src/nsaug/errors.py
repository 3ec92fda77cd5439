"""Exception hierarchy shared by all modules."""


class NsaugError(Exception):
    """Base class for every error raised by the package."""


class SingularMatrix(NsaugError):
    """A factorization met a zero pivot (or a residual check failed)."""


class ConvergenceFailure(NsaugError):
    """A dense decomposition did not converge."""


class DimensionMismatch(NsaugError, ValueError):
    pass


class ParseError(NsaugError, ValueError):
    pass


class TopologyError(NsaugError, ValueError):
    pass


class UnknownTag(NsaugError, KeyError):
    pass


class IncompatibleData(NsaugError, ValueError):
    """Neumann data of a pure-Neumann problem fails the compatibility test."""


class NonConvergence(NsaugError):
    """Newton iterations exhausted; ``history`` holds the increment norms."""

    def __init__(self, message, history=None, state=None):
        super().__init__(message)
        self.history = list(history or [])
        self.state = state


class SingularReducedSystem(SingularMatrix):
    """The projected saddle-point system is singular (reduced inf-sup failure)."""


class ZeroSnapshot(NsaugError, ValueError):
    pass


class AllZero(NsaugError, ValueError):
    pass


class DegenerateSet(NsaugError, ValueError):
    pass


class UnknownProblem(NsaugError, KeyError):
    pass


class ConfigError(NsaugError, ValueError):
    pass


class IoError(NsaugError, OSError):
    pass


class StageError(NsaugError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
