"""The two-sided Poisson likelihood-ratio process and its functionals.

``ln Z(x) = rho * N+(x) - x`` for x >= 0 and ``-rho * N-(-x) - x`` for x <= 0,
with independent Poisson streams of intensities ``1/(e^rho - 1)`` and
``1/(1 - e^-rho)``. Between events ``ln Z`` has slope -1, so the supremum on
each side is attained at event points (right values on the positive side,
left limits on the negative side), and the integrals reduce to sums over
events. See ``docs/telescoping.md`` for the derivation of the closed form used
by :func:`telescoped_zeta_xi`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np

from . import _fallback, kernels
from .errors import ParameterError, RangeError, TruncationError
from .rng import Stream

if TYPE_CHECKING:
    from .montecarlo import EstimateRow

Side = Literal["positive", "negative"]


@dataclass(frozen=True)
class RhoParam:
    """Jump size ``rho`` with the derived event intensities of both sides."""

    rho: float

    def __post_init__(self):
        rho = self.rho
        if isinstance(rho, bool) or not isinstance(rho, (int, float, np.floating)):
            raise ParameterError(f"rho must be a real number, got {rho!r}")
        if not (math.isfinite(rho) and rho > 0):
            raise ParameterError(f"rho must be finite and positive, got {rho!r}")
        object.__setattr__(self, "rho", float(rho))

    @property
    def lambda_plus(self) -> float:
        return 1.0 / math.expm1(self.rho)

    @property
    def lambda_minus(self) -> float:
        return -1.0 / math.expm1(-self.rho)


def _as_rho(rho) -> RhoParam:
    return rho if isinstance(rho, RhoParam) else RhoParam(rho)


@dataclass(frozen=True)
class EventList:
    """Strictly increasing positive event times of one side."""

    times: np.ndarray
    side: Side = "positive"

    def __post_init__(self):
        if self.side not in ("positive", "negative"):
            raise ParameterError(f"side must be 'positive' or 'negative', got {self.side!r}")
        t = np.array(self.times, dtype=np.float64, copy=True).reshape(-1)
        if t.size and (t[0] <= 0 or np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t))):
            raise ParameterError("event times must be finite, positive and strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class TruncationPolicy:
    log_margin: float = 40.0
    max_events: int = 10**8
    fail_on_cap: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.log_margin) and self.log_margin >= 10):
            raise ParameterError(f"log_margin must be at least 10, got {self.log_margin!r}")
        if int(self.max_events) < 1:
            raise ParameterError(f"max_events must be positive, got {self.max_events!r}")


@dataclass(frozen=True)
class FunctionalSample:
    zeta: float
    xi: float
    pos_events_used: int
    neg_events_used: int
    residual_log_bound: float
    truncated: bool = False


def _side_params(rho: RhoParam, side: Side) -> tuple[float, float]:
    if side == "positive":
        return rho.lambda_plus, rho.rho
    if side == "negative":
        return rho.lambda_minus, -rho.rho
    raise ParameterError(f"side must be 'positive' or 'negative', got {side!r}")


def log_weights(rho, events: EventList) -> np.ndarray:
    """Per-event log-weights: ``rho*i - x_i`` (positive) or ``rho - rho*i + x'_i`` (negative)."""
    rho = _as_rho(rho).rho
    i = np.arange(1, len(events) + 1, dtype=np.float64)
    if events.side == "positive":
        return rho * i - events.times
    return -rho * i + events.times + rho


def generate_events_until_drop(rho, side: Side, s: Stream,
                               policy: TruncationPolicy = TruncationPolicy()) -> EventList:
    """Draw one side's events until its log-weight has dropped out of play.

    Generation stops at the first event whose log-weight is ``log_margin``
    below the running maximum (origin included) and below ``-log_margin``.
    """
    rho = _as_rho(rho)
    rate, jump = _side_params(rho, side)
    t, _, truncated = _fallback.walk_side_arrays(
        s.bit_generator, rate, jump, policy.log_margin, int(policy.max_events))
    if truncated and policy.fail_on_cap:
        raise TruncationError(f"{side} side exceeded {policy.max_events} events at rho={rho.rho}")
    return EventList(t, side)


def telescoped_zeta_xi(rho, pos: EventList, neg: EventList) -> tuple[float, float]:
    """(zeta, xi) from the event-sum closed form, shifted by the per-side maxima.

    ``xi`` is ``x_k`` when the best positive log-weight strictly exceeds the best
    negative one and ``-x'_l`` otherwise.
    """
    rho = _as_rho(rho)
    if len(pos) == 0 or len(neg) == 0:
        raise ParameterError("both event lists must be non-empty")
    p = _fallback.side_summary(pos.times, log_weights(rho, pos))
    n = _fallback.side_summary(neg.times, log_weights(rho, neg))
    return _fallback.combine_sides(p, n)


def zeta_xi_windowed(rho, pos: EventList, neg: EventList) -> tuple[float, float]:
    """(zeta, xi) of Z restricted to the window ``[-x'_m, x_n]``.

    Integrates segment by segment with exact antiderivatives of ``e^{c - x}``
    and ``x e^{c - x}``; no telescoping, no truncation argument.
    """
    rho = _as_rho(rho).rho
    if len(pos) == 0 or len(neg) == 0:
        raise ParameterError("both event lists must be non-empty")
    # positive segments [a, a+d) carry ln Z = rho*i - x, top value at a
    a = np.concatenate(([0.0], pos.times[:-1]))
    d = np.diff(np.concatenate(([0.0], pos.times)))
    top_p = rho * np.arange(len(pos)) - a
    # negative segments u in [a', b') carry ln Z = -rho*i + u, top (left limit) at b'
    b = neg.times
    dn = np.diff(np.concatenate(([0.0], b)))
    top_n = -rho * np.arange(len(neg)) + b
    big = max(top_p.max(), top_n.max())
    wp, wn = np.exp(top_p - big), np.exp(top_n - big)
    one_p, one_n = -np.expm1(-d), -np.expm1(-dn)
    i0 = np.sum(wp * one_p) + np.sum(wn * one_n)
    i1 = np.sum(wp * ((a + 1.0) * one_p - d * np.exp(-d))) \
        - np.sum(wn * ((b - 1.0) * one_n + dn * np.exp(-dn)))
    # window argmax: x = 0, the positive events, the negative left limits
    cand_p = rho * np.arange(1, len(pos) + 1) - pos.times
    cand_n = rho - rho * np.arange(1, len(neg) + 1) + neg.times
    # the negative side always beats x = 0 (its first candidate is x'_1 > 0)
    k, l = int(np.argmax(cand_p)), int(np.argmax(cand_n))
    xi = pos.times[k] if cand_p[k] > cand_n[l] else -neg.times[l]
    return float(i1 / i0), float(xi)


def log_zrho_at(rho, pos: EventList, neg: EventList, x):
    """``ln Z(x)`` from the event counts; x may be a scalar or an array."""
    rho = _as_rho(rho).rho
    xa = np.asarray(x, dtype=np.float64)
    hp = pos.times[-1] if len(pos) else 0.0
    hn = neg.times[-1] if len(neg) else 0.0
    if np.any(xa > hp) or np.any(xa < -hn) or not np.all(np.isfinite(xa)):
        raise RangeError(f"x outside the event horizon [-{hn}, {hp}]")
    count_p = np.searchsorted(pos.times, xa, side="right")
    count_n = np.searchsorted(neg.times, -xa, side="right")
    out = np.where(xa >= 0, rho * count_p - xa, -rho * count_n - xa)
    return float(out) if out.ndim == 0 else out


def sample_zeta_xi(rho, s: Stream, policy: TruncationPolicy = TruncationPolicy(),
                   backend: str | None = None) -> FunctionalSample:
    rho = _as_rho(rho)
    k = kernels.get_backend(backend)
    zeta, xi, pu, nu, res, cut = k.poisson_batch(
        s.bit_generator, rho.rho, 1, policy.log_margin, int(policy.max_events))
    if cut[0] and policy.fail_on_cap:
        raise TruncationError(f"event cap {policy.max_events} reached at rho={rho.rho}")
    return FunctionalSample(float(zeta[0]), float(xi[0]), int(pu[0]), int(nu[0]),
                            float(res[0]), bool(cut[0]))


def sample_marginal_logX(rho, y: float, s: Stream, size=None):
    """Draws of ``ln X(y) = ln Z(y / rho)`` from its Poisson representation."""
    rho = _as_rho(rho)
    r = rho.rho
    if y == 0 or not math.isfinite(y):
        raise ParameterError("y must be finite and non-zero")
    if y > 0:
        return r * s.poisson(y / (r * math.expm1(r)), size) - y / r
    return -r * s.poisson(-y / (r * -math.expm1(-r)), size) - y / r


def tail_sup_samples(rho, thresholds, s: Stream, n: int,
                     policy: TruncationPolicy = TruncationPolicy(),
                     backend: str | None = None):
    """Per replication, ``sup_{|x| > T} ln Z(x)`` for each threshold T (in x units).

    Returns ``(sups, truncated)``; ``sups`` has one column per threshold.
    """
    rho = _as_rho(rho)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if thresholds.ndim != 1 or np.any(thresholds < 0):
        raise ParameterError("thresholds must be a 1-d array of non-negative values")
    k = kernels.get_backend(backend)
    return k.poisson_tail_batch(s.bit_generator, rho.rho, thresholds, int(n),
                                policy.log_margin, int(policy.max_events))


@dataclass(frozen=True)
class Model1:
    """i.i.d. sample with a density jump from ``a`` (left) to ``b`` (right)."""

    a: float
    b: float

    @property
    def rho(self) -> float:
        return abs(math.log(self.a / self.b))

    @property
    def scale(self) -> float:
        return 1.0 / (self.a - self.b) ** 2

    def check(self):
        if not (self.a > 0 and self.b > 0) or self.a == self.b:
            raise ParameterError("model1 needs a, b > 0 and a != b")


@dataclass(frozen=True)
class Model2:
    """Periodic Poisson intensity jumping from ``s_minus`` to ``s_plus``, period ``tau``."""

    tau: float
    s_minus: float
    s_plus: float

    @property
    def rho(self) -> float:
        return abs(math.log(self.s_plus / self.s_minus))

    @property
    def scale(self) -> float:
        return self.tau**2 / (self.s_plus - self.s_minus) ** 2

    def check(self):
        if not (self.s_minus > 0 and self.s_plus > 0 and self.tau > 0) or self.s_minus == self.s_plus:
            raise ParameterError("model2 needs tau, S-, S+ > 0 and S- != S+")


def rescale_to_model(row: EstimateRow, kind: Model1 | Model2) -> EstimateRow:
    """Express a row's second moments in the time units of a concrete model.

    The ratio (efficiency) is scale-free and carried over unchanged.
    """
    kind.check()
    if not math.isfinite(row.rho) or abs(row.rho - kind.rho) > 1e-12:
        raise ParameterError(f"row rho {row.rho} does not match model rho {kind.rho}")
    c = kind.scale
    b, m = row.B_hat * c, row.M_hat * c
    return dataclasses.replace(
        row, B_hat=b, se_B=row.se_B * c, M_hat=m, se_M=row.se_M * c,
        rho2B=row.rho**2 * b, rho2M=row.rho**2 * m,
    )
