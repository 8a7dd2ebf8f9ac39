"""Closed-form moments, series and constants for the limiting processes.

All functions take ``rho`` on the scale of the rescaled process
``X(y) = Z(y / rho)``, which is the scale where the small-rho limit lives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp

from .errors import NumericError, ParameterError

ZETA3_REFERENCE = 1.202056903159594


def _check_rho(rho: float) -> float:
    if isinstance(rho, bool) or not isinstance(rho, (int, float, np.floating)):
        raise ParameterError(f"rho must be a real number, got {rho!r}")
    if not (math.isfinite(rho) and rho > 0):
        raise ParameterError(f"rho must be finite and positive, got {rho!r}")
    return float(rho)


def _half_rate(rho: float) -> float:
    return math.tanh(rho / 4.0) / (2.0 * rho)


def half_moment(rho: float, y: float) -> float:
    """E X^{1/2}(y) = exp(-|y| tanh(rho/4) / (2 rho))."""
    rho = _check_rho(rho)
    return math.exp(-abs(y) * _half_rate(rho))


def quarter_moment(rho: float, y: float) -> float:
    """E X^{1/4}(y), exact from the Poisson moment generating function.

    For y >= 0 the exponent is ``y (1/(rho S) - 1/(4 rho))`` with
    ``S = e^{3rho/4} + e^{rho/2} + e^{rho/4} + 1``; for y <= 0 it is
    ``-y/(4 rho) + (-y)(e^{-rho/4} - 1)/(rho (1 - e^{-rho}))``. Both are
    rearranged below so that the 1/rho terms cancel analytically.
    """
    rho = _check_rho(rho)
    if y >= 0:
        s = math.exp(0.75 * rho) + math.exp(0.5 * rho) + math.exp(0.25 * rho) + 1.0
        t = math.expm1(0.25 * rho) + math.expm1(0.5 * rho) + math.expm1(0.75 * rho)
    else:
        q = math.exp(-0.25 * rho)
        s = 1.0 + q + q * q + q * q * q
        t = -(math.expm1(-0.25 * rho) + math.expm1(-0.5 * rho) + math.expm1(-0.75 * rho))
    return math.exp(-abs(y) * t / (4.0 * rho * s))


def sqrt_increment_second_moment(rho: float, y1: float, y2: float) -> float:
    """E |X^{1/2}(y1) - X^{1/2}(y2)|^2, for points on the same or opposite sides."""
    rho = _check_rho(rho)
    return -2.0 * math.expm1(-abs(y1 - y2) * _half_rate(rho))


def log_increment_moments(rho: float, delta: float,
                          side: Literal["positive", "negative"] = "positive") -> tuple[float, float]:
    """Mean and second moment of ``ln X(delta)`` (positive) or ``ln X(-delta)`` (negative).

    The second moment has the form ``beta*delta + gamma*delta**2`` with
    ``gamma = mean_rate**2``.
    """
    rho = _check_rho(rho)
    if not (math.isfinite(delta) and delta > 0):
        raise ParameterError(f"delta must be positive, got {delta!r}")
    if side == "positive":
        em1 = math.expm1(rho)
        beta = rho / em1
        drift = 1.0 / em1 - 1.0 / rho
    elif side == "negative":
        em1 = -math.expm1(-rho)
        beta = rho / em1
        drift = 1.0 / rho - 1.0 / em1
    else:
        raise ParameterError(f"side must be 'positive' or 'negative', got {side!r}")
    return drift * delta, beta * delta + drift**2 * delta**2


def log_increment_coefficients(rho: float, side: Literal["positive", "negative"] = "positive"):
    """(beta, gamma) of the second moment ``beta*delta + gamma*delta**2``."""
    rho = _check_rho(rho)
    if side == "positive":
        em1 = math.expm1(rho)
        return rho / em1, ((em1 - rho) / (rho * em1)) ** 2
    em1 = -math.expm1(-rho)
    return rho / em1, ((math.expm1(-rho) + rho) / (rho * em1)) ** 2


def ladder_intensity(rho: float) -> float:
    """Intensity ``rho / (e^rho - 1)`` of the up-jump walk whose supremum is eta."""
    rho = _check_rho(rho)
    return rho / math.expm1(rho)


def _eta_series_log(rho: float, x: float) -> float:
    """log of sum_{n > x} (n - x)^n / n! (lam e^{-lam})^n, summed in log space."""
    lam = ladder_intensity(rho)
    log_z = math.log(lam) - lam
    n0 = math.floor(x) + 1
    guard = x + 50.0 / rho
    chunk = 4096
    parts = []
    total = -math.inf
    while True:
        n = np.arange(n0, n0 + chunk, dtype=np.float64)
        terms = n * np.log(n - x) - gammaln(n + 1.0) + n * log_z
        parts.append(terms)
        total = np.logaddexp(total, logsumexp(terms))
        if terms[-1] < total + math.log(1e-16) and n[-1] > guard and terms[-1] < terms[-2]:
            break
        n0 += chunk
        if n0 > 1e9:
            raise NumericError(f"eta tail series did not converge at rho={rho}, x={x}")
    return float(logsumexp(np.concatenate(parts)))


def eta_tail(rho: float, x: float) -> float:
    """P{eta >= x} for eta = sup_t (N(t) - t), N Poisson of intensity rho/(e^rho - 1).

    Equals 1 for x <= 0; for x > 0 it is the classical series
    ``(1 - lam) e^{lam x} sum_{n > x} (n - x)^n / n! (lam e^{-lam})^n``.
    """
    rho = _check_rho(rho)
    if x <= 0:
        return 1.0
    lam = ladder_intensity(rho)
    # 1 - lam without cancellation for small rho
    one_minus = (math.expm1(rho) - rho) / math.expm1(rho)
    return min(1.0, one_minus * math.exp(lam * x + _eta_series_log(rho, x)))


def eta_exp_quarter_moment(rho: float) -> float:
    """E exp(rho * eta / 4) = 1 + (rho/4) * int_0^inf e^{rho x/4} P{eta >= x} dx."""
    rho = _check_rho(rho)
    # integrand <= e^{-rho x / 4}; truncating at `upper` drops less than 1e-13
    upper = 4.0 * 30.0 / rho

    def f(x):
        return math.exp(0.25 * rho * x) * eta_tail(rho, x)

    edges = np.unique(np.concatenate(([0.0, 1.0], np.arange(1.0, upper, 8.0 / rho), [upper])))
    value = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f, lo, hi, limit=200, epsabs=1e-13, epsrel=1e-12)
        value += v
        err += e
    if not err < 1e-10:
        raise NumericError(f"quadrature error estimate {err} too large at rho={rho}")
    return 1.0 + 0.25 * rho * value


def solve_ladder_rate(lambda_prime: float) -> float:
    """Positive root r of ``lambda' (e^{-r} - 1) + r = 0`` by safeguarded Newton."""
    lp = float(lambda_prime)
    if not (math.isfinite(lp) and lp > 1.0):
        raise ParameterError(f"lambda' must exceed 1 for a positive root, got {lambda_prime!r}")

    def f(r):
        return lp * math.expm1(-r) + r

    # f < 0 on (0, root), f > 0 beyond; these brackets hold for every lp > 1
    lo, hi = (lp - 1.0) / lp, lp
    r = min(max(2.0 * (lp - 1.0), lo), hi)
    for _ in range(200):
        fr = f(r)
        if fr == 0.0:
            return r
        if fr < 0:
            lo = r
        else:
            hi = r
        step = fr / (1.0 - lp * math.exp(-r))
        nxt = r - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - r) <= 1e-16 * max(r, 1e-300):
            r = nxt
            break
        r = nxt
    if not abs(f(r)) < 1e-12:
        raise NumericError(f"ladder rate did not converge for lambda'={lp}")
    return r


def riemann_zeta3(n_terms: int = 1000) -> float:
    """zeta(3) from a direct sum plus an Euler-Maclaurin tail.

    sum_{n >= N} n^-3 = 1/(2N^2) + 1/(2N^3) + 1/(4N^4) - 1/(12N^6) + R with
    |R| below 1/(12 N^8); at N = 1000 that is under 1e-25.
    """
    N = int(n_terms)
    head = math.fsum(1.0 / (n * n * n) for n in range(N - 1, 0, -1))
    tail = math.fsum([1.0 / (2 * N**2), 1.0 / (2 * N**3), 1.0 / (4 * N**4), -1.0 / (12 * N**6)])
    return head + tail


@dataclass(frozen=True)
class LimitConstants:
    zeta3: float
    B0: float
    M0: float
    E0: float
    B_inf: float = 1.0
    M_inf: float = 2.0
    E_inf: float = 0.5


def limit_constants() -> LimitConstants:
    z3 = riemann_zeta3()
    return LimitConstants(zeta3=z3, B0=16.0 * z3, M0=26.0, E0=8.0 * z3 / 13.0)
