"""Simulation and analysis of the two-sided Poisson likelihood-ratio process.

Estimates the second moments of the Bayesian and maximum-likelihood
functionals (zeta and xi) of the process across jump sizes rho, their
Brownian (rho -> 0) and degenerate (rho -> inf) limits, and the closed-form
moment results the simulations are checked against.
"""

from .errors import (LLRError, NumericError, ParameterError, RangeError, RunError,
                     TruncationError)
from .kernels import BACKEND
from .rng import SeedSpec, Stream, derive_stream

__all__ = [
    "BACKEND", "LLRError", "NumericError", "ParameterError", "RangeError", "RunError",
    "SeedSpec", "Stream", "TruncationError", "derive_stream",
]
__version__ = "0.1.0"
