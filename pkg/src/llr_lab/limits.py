"""Samplers for the two boundary processes.

The Brownian process ``exp(W(x) - |x|/2)`` is sampled on a uniform grid whose
half-window doubles until both boundary values sit ``log_margin`` below the
maximum. The degenerate process ``e^{-u} 1{u > eta}`` is sampled exactly:
``zeta = eta + 1`` and ``xi = eta`` with ``eta = ln U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ParameterError, TruncationError
from .rng import Stream

MAX_GRID_POINTS = 10**6


@dataclass(frozen=True)
class BrownianGridConfig:
    h: float = 0.005
    A0: float = 50.0
    growth_factor: float = 2.0
    log_margin: float = 40.0

    def __post_init__(self):
        if not (0 < self.h <= 0.1):
            raise ParameterError(f"grid step h must lie in (0, 0.1], got {self.h}")
        if not self.A0 >= 10:
            raise ParameterError(f"initial half-window A0 must be at least 10, got {self.A0}")
        if not self.growth_factor > 1:
            raise ParameterError(f"growth_factor must exceed 1, got {self.growth_factor}")
        if not (math.isfinite(self.log_margin) and self.log_margin > 0):
            raise ParameterError(f"log_margin must be positive, got {self.log_margin}")


@dataclass(frozen=True)
class LimitSample:
    zeta: float
    xi: float
    window_used: float


def brownian_batch(cfg: BrownianGridConfig, s: Stream, n: int, backend: str | None = None):
    """``(zeta, xi, window, truncated)`` arrays for ``n`` Brownian replications."""
    k = kernels.get_backend(backend)
    return k.brownian_batch(s.bit_generator, cfg.h, cfg.A0, cfg.growth_factor,
                            cfg.log_margin, MAX_GRID_POINTS, int(n))


def sample_zeta_xi_brownian(cfg: BrownianGridConfig, s: Stream,
                            backend: str | None = None) -> LimitSample:
    zeta, xi, window, cut = brownian_batch(cfg, s, 1, backend)
    if cut[0]:
        raise TruncationError(f"Brownian window would exceed {MAX_GRID_POINTS} grid points")
    return LimitSample(float(zeta[0]), float(xi[0]), float(window[0]))


def infinity_from_uniform(u):
    """Map ``u`` in [0, 1) to ``eta = ln(1 - u)``, distributed as ln of a uniform."""
    return np.log1p(-np.asarray(u, dtype=np.float64)) if np.ndim(u) else math.log1p(-u)


def infinity_batch(s: Stream, n: int):
    """``(zeta, xi, window)`` arrays for ``n`` draws of the degenerate limit."""
    eta = infinity_from_uniform(s.uniform(int(n)))
    return eta + 1.0, eta, np.abs(eta)


def sample_zeta_xi_infinity(s: Stream) -> LimitSample:
    eta = infinity_from_uniform(float(s.uniform()))
    return LimitSample(eta + 1.0, eta, abs(eta))
