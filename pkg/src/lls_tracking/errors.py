"""Exception hierarchy shared by all modules."""


class LLSError(Exception):
    """Base class for every error raised by this package."""


class DegenerateQuery(LLSError):
    pass


class DegeneratePoints(LLSError):
    pass


class InfeasibleGeometry(LLSError):
    pass


class StepTooLarge(LLSError):
    pass


class NoSolution(LLSError):
    """Steering equation has no real solution (sine argument outside [-1, 1])."""


class NoCompression(LLSError):
    """The leg spring never compresses below its touchdown length."""


class QuadratureFailure(LLSError):
    pass


class IntegrationDiverged(LLSError):
    pass


class MaxStepExceeded(LLSError):
    pass


class Unachievable(LLSError):
    """No positive spring constant produces the requested chord."""


class NoConstrainedSolution(LLSError):
    pass


class ConeEmpty(LLSError):
    pass


class OutOfWindow(LLSError):
    pass


class PlanFailure(LLSError):
    pass


class ConfigError(LLSError):
    pass


class InvariantViolation(LLSError):
    pass


class AssumptionViolated(UserWarning):
    """A small-step approximation is being used outside its regime."""
