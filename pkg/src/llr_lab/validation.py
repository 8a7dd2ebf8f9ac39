"""Acceptance checks tying the simulators to the analytic results.

Each check returns a :class:`CheckResult`. ``quick=True`` runs every Monte
Carlo check with a tenth of the replications and doubled tolerances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from . import analytic, kernels, poisson
from .limits import BrownianGridConfig
from .montecarlo import (BrownianModel, InfinityModel, PoissonModel, ks_pvalue, ks_statistic,
                         model_seed, run_replications, sweep)
from .poisson import EventList, TruncationPolicy
from .rng import SeedSpec, derive_stream

DEFAULT_SEED = 271828


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


@dataclass(frozen=True)
class Settings:
    seed: SeedSpec
    quick: bool = False
    workers: int = 1
    backend: str | None = None

    def n(self, full: int) -> int:
        return full // 10 if self.quick else full

    def tol(self, full: float) -> float:
        return 2.0 * full if self.quick else full

    def sub(self, number: int) -> SeedSpec:
        return self.seed.child(number)


def _within(value, target, slack) -> bool:
    return abs(value - target) <= slack


def check_infinity(cfg: Settings):
    n, k = cfg.n(10**6), cfg.tol(4.0)
    r = run_replications(InfinityModel(), n, cfg.sub(1), workers=cfg.workers)
    ok = (_within(r.B_hat, 1.0, k * r.se_B) and _within(r.M_hat, 2.0, k * r.se_M)
          and _within(r.E_hat, 0.5, k * r.se_E))
    return ok, (f"N={n} B={r.B_hat:.4f}+-{r.se_B:.4f} M={r.M_hat:.4f}+-{r.se_M:.4f} "
                f"E={r.E_hat:.4f}+-{r.se_E:.4f}")


def check_brownian(cfg: Settings):
    n = cfg.n(10**5)
    c = analytic.limit_constants()
    r = run_replications(BrownianModel(BrownianGridConfig(h=0.005)), n, cfg.sub(2),
                         workers=cfg.workers, backend=cfg.backend)
    rel = cfg.tol(0.03)
    ok = (abs(r.M_hat / c.M0 - 1) <= rel and abs(r.B_hat / c.B0 - 1) <= rel
          and abs(r.E_hat - c.E0) <= cfg.tol(0.03) and r.accepted)
    return ok, (f"N={n} B={r.B_hat:.3f}+-{r.se_B:.3f} (vs {c.B0:.4f}) "
                f"M={r.M_hat:.3f}+-{r.se_M:.3f} (vs 26) E={r.E_hat:.4f}+-{r.se_E:.4f} "
                f"(vs {c.E0:.4f}) truncated={r.truncated_count}")


def check_small_rho(cfg: Settings):
    n, k = cfg.n(10**5), cfg.tol(4.0)
    c = analytic.limit_constants()
    rows = sweep([0.1, 0.25, 0.5], n, cfg.sub(3), workers=cfg.workers, backend=cfg.backend)
    rows = rows[::-1]  # rho decreasing: 0.5, 0.25, 0.1
    ok = all(r.accepted for r in rows)
    parts = []
    for name, target, get in (("rho2B", c.B0, lambda r: (r.rho2B, r.rho**2 * r.se_B)),
                              ("rho2M", c.M0, lambda r: (r.rho2M, r.rho**2 * r.se_M))):
        vals = [get(r) for r in rows]
        for (v0, s0), (v1, s1) in zip(vals, vals[1:]):
            ok &= abs(v1 - target) <= abs(v0 - target) + k * math.hypot(s0, s1)
        ok &= abs(vals[-1][0] / target - 1) <= cfg.tol(0.15)
        parts.append(name + "=" + ",".join(f"{v:.3f}" for v, _ in vals))
    return ok, f"N={n} rho=0.5,0.25,0.1 " + " ".join(parts)


def check_large_rho(cfg: Settings):
    n = cfg.n(10**5)
    r = run_replications(PoissonModel(10.0), n, model_seed(cfg.sub(4), PoissonModel(10.0)),
                         workers=cfg.workers, backend=cfg.backend)
    w = cfg.tol(1.0)
    ok = (_within(r.B_hat, 1.0, 0.1 * w) and _within(r.M_hat, 2.0, 0.2 * w)
          and _within(r.E_hat, 0.5, 0.05 * w) and r.accepted)
    return ok, f"N={n} B={r.B_hat:.4f} M={r.M_hat:.4f} E={r.E_hat:.4f}"


def check_fractional_moments(cfg: Settings):
    n, k = cfg.n(10**5), cfg.tol(4.0)
    worst, ok = 0.0, True
    for i, rho in enumerate((0.5, 1.0, 2.0)):
        for j, y in enumerate((-2.0, -0.5, 0.5, 2.0)):
            logx = poisson.sample_marginal_logX(rho, y, derive_stream(cfg.sub(5), 4 * i + j), n)
            for power, exact in ((0.5, analytic.half_moment(rho, y)),
                                 (0.25, analytic.quarter_moment(rho, y))):
                v = np.exp(power * logx)
                z = abs(v.mean() - exact) / (v.std(ddof=1) / math.sqrt(n))
                worst = max(worst, z)
                ok &= z <= k
    return ok, f"N={n} 12 points x 2 moments, max |z|={worst:.2f}"


def check_log_increment(cfg: Settings):
    n, k = cfg.n(10**6), cfg.tol(4.0)
    zs = []
    for i, (side, y) in enumerate((("positive", 1.0), ("negative", -1.0))):
        logx = poisson.sample_marginal_logX(1.0, y, derive_stream(cfg.sub(6), i), n)
        mean, second = analytic.log_increment_moments(1.0, 1.0, side)
        sq = logx * logx
        zs.append(abs(logx.mean() - mean) / (logx.std(ddof=1) / math.sqrt(n)))
        zs.append(abs(sq.mean() - second) / (sq.std(ddof=1) / math.sqrt(n)))
    return max(zs) <= k, f"N={n} rho=1 delta=1 both sides, |z|=" + ",".join(f"{z:.2f}" for z in zs)


def ladder_prime_samples(rho: float, n: int, s, backend: str | None = None,
                         max_events: int = 10**8):
    """Draws of sup_t (t - N(t)) with N Poisson of intensity rho/(1 - e^-rho)."""
    lam = rho / -math.expm1(-rho)
    k = kernels.get_backend(backend)
    return k.side_sup_batch(s.bit_generator, lam, -1.0, int(n), 40.0 / rho, max_events)


def check_ladder(cfg: Settings):
    n = cfg.n(10**5)
    alpha = 0.01 / 2.0 if cfg.quick else 0.01
    ok, parts = True, []
    for i, rho in enumerate((0.5, 2.0)):
        sups, cut = ladder_prime_samples(rho, n, derive_stream(cfg.sub(7), i), cfg.backend)
        d = ks_statistic(sups, lambda x, r=rho: -np.expm1(-r * x))
        p = ks_pvalue(d, n)
        ok &= p > alpha and not cut.any()
        parts.append(f"rho={rho} D={d:.4f} p={p:.3f}")
    worst_tail, worst_q = -math.inf, 0.0
    for rho in (0.05, 0.5, 1.0, 5.0):
        for x in np.linspace(0.0, 40.0 / rho, 41)[1:]:
            worst_tail = max(worst_tail, analytic.eta_tail(rho, x) / math.exp(-0.5 * rho * x))
        worst_q = max(worst_q, analytic.eta_exp_quarter_moment(rho))
    ok &= worst_tail <= 1.0 and worst_q <= 2.0
    parts.append(f"max tail/bound={worst_tail:.3f} max quarter moment={worst_q:.4f}")
    return ok, f"N={n} " + " ".join(parts)


def check_marginal_normal(cfg: Settings):
    n, limit = cfg.n(10**5), cfg.tol(0.02)
    ref = stats.norm(loc=-0.5, scale=1.0).cdf
    ds = [ks_statistic(poisson.sample_marginal_logX(0.01, y, derive_stream(cfg.sub(8), i), n), ref)
          for i, y in enumerate((1.0, -1.0))]
    return max(ds) < limit, f"N={n} rho=0.01 KS(+1)={ds[0]:.4f} KS(-1)={ds[1]:.4f}"


def check_tail_bound(cfg: Settings):
    n, k, b = cfg.n(10**5), cfg.tol(4.0), 0.05
    a_values = np.array([10.0, 20.0])
    ok, parts = True, []
    for i, rho in enumerate((0.1, 0.5)):
        sups, cut = poisson.tail_sup_samples(rho, a_values / rho, derive_stream(cfg.sub(9), i), n,
                                             backend=cfg.backend)
        ok &= cut.sum() <= 1e-4 * n
        for j, a in enumerate(a_values):
            freq = float(np.mean(sups[:, j] > -b * a))
            bound = 2.0 * math.exp(-b * a)
            p0 = min(bound, 1.0)
            ok &= freq <= bound + k * math.sqrt(p0 * (1 - p0) / n)
            parts.append(f"rho={rho} A={a:g}: {freq:.4f}<={bound:.4f}")
    return ok, f"N={n} " + " ".join(parts)


def quadrature_zeta(rho: float, pos: EventList, neg: EventList, step: float = 1e-4) -> float:
    """zeta by trapezoid sums on a fine grid aligned to every jump of ln Z."""
    edges = np.concatenate((-neg.times[::-1], [0.0], pos.times))
    mids = 0.5 * (edges[:-1] + edges[1:])
    level = poisson.log_zrho_at(rho, pos, neg, mids)
    big = level.max() + 0.5 * np.diff(edges).max()
    num = den = 0.0
    for lo, hi, mid, lev in zip(edges[:-1], edges[1:], mids, level):
        m = max(1, int(math.ceil((hi - lo) / step)))
        x = np.linspace(lo, hi, m + 1)
        f = np.exp(lev - (x - mid) - big)
        num += integrate.trapezoid(x * f, x)
        den += integrate.trapezoid(f, x)
    return num / den


def exhaustive_argmax(rho: float, pos: EventList, neg: EventList) -> float:
    """Location of the largest segment-start value of ln Z over the event window."""
    edges = np.concatenate((-neg.times[::-1], [0.0], pos.times))
    mids = 0.5 * (edges[:-1] + edges[1:])
    level = poisson.log_zrho_at(rho, pos, neg, mids)
    start = level + (mids - edges[:-1])
    return float(edges[int(np.argmax(start))])


def oracle_event_sets(seed: SeedSpec, count: int = 100, margin: float = 60.0):
    """Fixed random event sets (rho, pos, neg) with rho in [1, 3]."""
    policy = TruncationPolicy(log_margin=margin)
    for i in range(count):
        s = derive_stream(seed, i)
        rho = 1.0 + 2.0 * float(s.uniform())
        pos = poisson.generate_events_until_drop(rho, "positive", s, policy)
        neg = poisson.generate_events_until_drop(rho, "negative", s, policy)
        yield rho, pos, neg


def check_oracles(cfg: Settings):
    worst_q = worst_t = 0.0
    mismatches = 0
    for rho, pos, neg in oracle_event_sets(cfg.sub(10)):
        zeta, xi = poisson.zeta_xi_windowed(rho, pos, neg)
        scale = max(abs(zeta), 1.0)
        worst_q = max(worst_q, abs(quadrature_zeta(rho, pos, neg) - zeta) / scale)
        zt, xt = poisson.telescoped_zeta_xi(rho, pos, neg)
        worst_t = max(worst_t, abs(zt - zeta) / scale)
        mismatches += (exhaustive_argmax(rho, pos, neg) != xi) + (xt != xi)
    ok = worst_q <= 1e-6 and worst_t <= 1e-10 and mismatches == 0
    return ok, (f"100 sets: quadrature {worst_q:.1e}, telescoped {worst_t:.1e}, "
                f"argmax mismatches {mismatches}")


def check_determinism(cfg: Settings):
    blobs = {}
    for model, n in ((PoissonModel(1.0), 20000), (InfinityModel(), 50000)):
        for w in (1, 4, 8):
            row = run_replications(model, n, model_seed(cfg.sub(11), model), chunk_size=1000,
                                   workers=w, backend=cfg.backend)
            blobs.setdefault(type(model).__name__, set()).add(row.to_json_bytes())
    ok = all(len(v) == 1 for v in blobs.values())
    return ok, "workers 1,4,8: " + ", ".join(f"{k} {len(v)} distinct" for k, v in blobs.items())


CHECKS: dict[int, tuple[str, Callable[[Settings], tuple[bool, str]]]] = {
    1: ("degenerate limit calibration", check_infinity),
    2: ("Brownian constants", check_brownian),
    3: ("small-rho trend", check_small_rho),
    4: ("large-rho limit", check_large_rho),
    5: ("fractional moments", check_fractional_moments),
    6: ("log-increment moments", check_log_increment),
    7: ("ladder distributions", check_ladder),
    8: ("marginal normal limit", check_marginal_normal),
    9: ("tail bound", check_tail_bound),
    10: ("oracle equivalence", check_oracles),
    11: ("determinism", check_determinism),
}


def run_check(number: int, cfg: Settings) -> CheckResult:
    name, fn = CHECKS[number]
    t0 = time.perf_counter()
    passed, detail = fn(cfg)
    return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def run_all(seed: SeedSpec | None = None, quick: bool = False, workers: int = 1,
            backend: str | None = None, only=None, report: Callable[[str], None] | None = None):
    cfg = Settings(seed or SeedSpec(DEFAULT_SEED), quick, workers, backend)
    results = []
    for number in sorted(only or CHECKS):
        res = run_check(number, cfg)
        if report:
            report(res.line())
        results.append(res)
    return results
