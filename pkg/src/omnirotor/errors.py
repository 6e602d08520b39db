"""Exception types raised across the package."""


class OmniRotorError(Exception):
    """Base class for all package errors."""


class NonSkewInput(OmniRotorError, ValueError):
    pass


class DegenerateInput(OmniRotorError, ValueError):
    pass


class DimensionMismatch(OmniRotorError, ValueError):
    pass


class RankDeficient(OmniRotorError, ValueError):
    """The rotor geometry cannot produce an arbitrary body wrench."""


class SingularMatrix(OmniRotorError, ValueError):
    pass


class InfeasibleForUnidirectional(OmniRotorError, ValueError):
    """A unidirectional rotor would need negative thrust."""


class NonPositiveConstant(OmniRotorError, ValueError):
    pass


class ConfigParse(OmniRotorError, ValueError):
    pass


class GainInfeasible(OmniRotorError):
    """No positive design constants certify the chosen gains."""


class NumericalDivergence(OmniRotorError, RuntimeError):
    """The simulated state left the sane range; ``trace`` holds the partial log."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
