"""Exception hierarchy shared by every module of the package."""


class LLRError(Exception):
    """Base class for all errors raised by llr_lab."""


class ParameterError(LLRError, ValueError):
    """An argument violates a documented precondition."""


class RangeError(LLRError, ValueError):
    """A query point lies outside the simulated event horizon."""


class TruncationError(LLRError, RuntimeError):
    """A sampler hit its event or grid-size cap before its stopping rule fired."""


class NumericError(LLRError, ArithmeticError):
    """A series or quadrature failed to reach its tolerance."""


class RunError(LLRError, RuntimeError):
    """A Monte Carlo run produced no usable replications."""
