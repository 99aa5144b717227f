"""Exception hierarchy.

Two families map onto the CLI exit codes: :class:`ModelError` (exit 2) for
inputs that violate a model assumption, :class:`NumericalError` (exit 3) for
computations that fail or detect an internal inconsistency.
"""


class RuinLabError(Exception):
    """Base class for all package errors."""


class ModelError(RuinLabError, ValueError):
    """The model or its parameters are outside the supported domain."""


class NumericalError(RuinLabError, ArithmeticError):
    """A numerical routine failed or produced an inconsistent result."""


class InvalidPMF(ModelError):
    pass


class InvalidPerturbation(ModelError):
    pass


class EmptySite(ModelError):
    pass


class EmptyTail(ModelError):
    pass


class DegenerateModel(ModelError):
    pass


class DegenerateAtZero(ModelError):
    pass


class NPCViolation(ModelError):
    """Net profit condition is neutral or violated where a strict one is needed."""


class NeedsShift(ModelError):
    """P(X = 0) = 0; the support has to be shifted before recursing."""


class CannotInvert(ModelError):
    pass


class ConfigError(ModelError):
    """Run configuration failed validation; ``pointer`` locates the field."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.detail = message


class RootFailure(NumericalError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class CouplingBroken(NumericalError):
    pass


class InconsistentBlock(NumericalError):
    pass


class StateBudgetExceeded(NumericalError):
    def __init__(self, message: str, achieved_horizon: int, partial=None):
        super().__init__(f"{message} (achieved T={achieved_horizon})")
        self.achieved_horizon = achieved_horizon
        self.partial = partial


class CensoringTooHigh(NumericalError):
    pass


class InsufficientPrecision(NumericalError):
    """A Monte Carlo estimate is too noisy for the requested gate."""
