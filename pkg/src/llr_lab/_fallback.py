"""Pure numpy versions of the compiled kernels.

Draw order matches :mod:`llr_lab._kernels` exactly: event times are built
with the same sequential additions, and any uniforms drawn past a stopping
point are handed back by rewinding the PCG64 state. Results agree to
rounding: the weight sums are added in a different order, and numpy's
vectorised log1p may differ from the C library's in the last bit.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

_MAX_BLOCK = 1 << 16


def _initial_block(rate: float, jump: float, margin: float, horizon: float) -> int:
    # expected events to drift `margin` below the start (and past the horizon)
    per_event = (1.0 / rate - jump) if jump > 0 else (-jump - 1.0 / rate)
    per_event = max(per_event, 1e-12)
    guess = 1.25 * (margin + 5.0) / per_event + rate * horizon
    return int(min(max(guess, 16), _MAX_BLOCK))


def walk_side_arrays(bit_generator, rate, jump, margin, max_events, horizon=0.0):
    """Event times and values of one side walk.

    The walk takes the value ``jump*i + drift*t_i + offset`` after event ``i``
    with ``drift = -sign(jump)`` and ``offset = max(-jump, 0)``. It stops at the
    first event beyond ``horizon`` whose value is at least ``margin`` below the
    running maximum (origin included) and below ``-margin``.

    Returns ``(t, v, truncated)``.
    """
    gen = np.random.Generator(bit_generator)
    drift = -1.0 if jump > 0 else 1.0
    offset = -jump if jump < 0 else 0.0
    t_parts, v_parts = [], []
    t_last, run, used = 0.0, 0.0, 0
    block = _initial_block(rate, jump, margin, horizon)
    while True:
        size = min(block, max_events - used)
        state = bit_generator.state
        u = gen.random(size)
        dt = -np.log1p(-u) / rate
        t = np.cumsum(np.concatenate(([t_last], dt)))[1:]
        i = np.arange(used + 1, used + size + 1, dtype=np.float64)
        v = jump * i + drift * t + offset
        runmax = np.maximum.accumulate(np.concatenate(([run], v)))[1:]
        stop = (t > horizon) & (v <= runmax - margin) & (v <= -margin)
        if stop.any():
            j = int(np.argmax(stop)) + 1
            if j < size:
                bit_generator.state = state
                bit_generator.advance(j)
            t_parts.append(t[:j])
            v_parts.append(v[:j])
            return np.concatenate(t_parts), np.concatenate(v_parts), False
        t_parts.append(t)
        v_parts.append(v)
        used += size
        t_last, run = t[-1], runmax[-1]
        if used >= max_events:
            return np.concatenate(t_parts), np.concatenate(v_parts), True
        block = min(2 * block, _MAX_BLOCK)


def side_summary(t, v):
    """``(vmax, t_at_max, s0, s1)`` with sums of exp(v - vmax) and t*exp(v - vmax)."""
    k = int(np.argmax(v))
    vmax = v[k]
    e = np.exp(v - vmax)
    return vmax, t[k], e.sum(), (t * e).sum()


def combine_sides(pos, neg):
    """(zeta, xi) from the two side summaries (telescoped closed-form sums)."""
    vp, tp, s0p, s1p = pos
    vn, tn, s0n, s1n = neg
    big = max(vp, vn)
    ep, en = math.exp(vp - big), math.exp(vn - big)
    s0p, s1p, s0n, s1n = s0p * ep, s1p * ep, s0n * en, s1n * en
    zeta = (s1p + s0p - s1n + s0n) / (s0p + s0n)
    xi = tp if vp > vn else -tn
    return zeta, xi


def poisson_batch(bit_generator, rho, n, margin, max_events):
    lam_p = 1.0 / math.expm1(rho)
    lam_n = -1.0 / math.expm1(-rho)
    zeta, xi, residual = np.empty(n), np.empty(n), np.empty(n)
    pos_used = np.empty(n, dtype=np.int64)
    neg_used = np.empty(n, dtype=np.int64)
    truncated = np.zeros(n, dtype=np.uint8)
    for r in range(n):
        tp, vp, cut_p = walk_side_arrays(bit_generator, lam_p, rho, margin, max_events)
        tn, vn, cut_n = walk_side_arrays(bit_generator, lam_n, -rho, margin, max_events)
        pos, neg = side_summary(tp, vp), side_summary(tn, vn)
        zeta[r], xi[r] = combine_sides(pos, neg)
        pos_used[r], neg_used[r] = tp.size, tn.size
        residual[r] = max(vp[-1], vn[-1]) - max(pos[0], neg[0])
        truncated[r] = cut_p or cut_n
    return zeta, xi, pos_used, neg_used, residual, truncated


def _tail_sups(t, v, jump, thresholds):
    drift = -1.0 if jump > 0 else 1.0
    out = np.empty(len(thresholds))
    for j, thr in enumerate(thresholds):
        before = int(np.searchsorted(t, thr, side="right"))
        at_thr = jump * before + drift * thr
        out[j] = max(at_thr, v[before:].max()) if before < t.size else at_thr
    return out


def poisson_tail_batch(bit_generator, rho, thresholds, n, margin, max_events):
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    lam_p = 1.0 / math.expm1(rho)
    lam_n = -1.0 / math.expm1(-rho)
    horizon = max(0.0, float(thresholds.max()))
    sups = np.empty((n, thresholds.size))
    truncated = np.zeros(n, dtype=np.uint8)
    for r in range(n):
        tp, vp, cut_p = walk_side_arrays(bit_generator, lam_p, rho, margin, max_events, horizon)
        tn, vn, cut_n = walk_side_arrays(bit_generator, lam_n, -rho, margin, max_events, horizon)
        sups[r] = np.maximum(_tail_sups(tp, vp, rho, thresholds), _tail_sups(tn, vn, -rho, thresholds))
        truncated[r] = cut_p or cut_n
    return sups, truncated


def side_sup_batch(bit_generator, rate, jump, n, margin, max_events):
    sups = np.empty(n)
    truncated = np.zeros(n, dtype=np.uint8)
    for r in range(n):
        _, v, cut = walk_side_arrays(bit_generator, rate, jump, margin, max_events)
        sups[r] = max(v.max(), 0.0)
        truncated[r] = cut
    return sups, truncated


class _GridSide:
    __slots__ = ("k", "w", "vmax", "kmax", "s0", "s1", "last")

    def __init__(self):
        self.k, self.w = 0, 0.0
        self.vmax, self.kmax = -math.inf, 0
        self.s0 = self.s1 = self.last = 0.0

    def extend(self, gen, upto, h, sqrt_h):
        m = upto - self.k
        if m <= 0:
            return
        z = gen.standard_normal(m)
        w = np.cumsum(np.concatenate(([self.w], sqrt_h * z)))[1:]
        x = np.arange(self.k + 1, upto + 1, dtype=np.float64) * h
        v = w - 0.5 * x
        j = int(np.argmax(v))
        if v[j] > self.vmax:
            scale = math.exp(self.vmax - v[j])
            self.s0 *= scale
            self.s1 *= scale
            self.vmax, self.kmax = float(v[j]), self.k + 1 + j
        e = np.exp(v - self.vmax)
        self.s0 += e.sum()
        self.s1 += (x * e).sum()
        self.k, self.w, self.last = upto, float(w[-1]), float(v[-1])


def brownian_batch(bit_generator, h, a0, growth, margin, max_points, n):
    gen = np.random.Generator(bit_generator)
    k0 = int(math.ceil(a0 / h - 1e-9))
    sqrt_h = math.sqrt(h)
    zeta, xi, window = np.empty(n), np.empty(n), np.empty(n)
    truncated = np.zeros(n, dtype=np.uint8)
    for r in range(n):
        pos, neg = _GridSide(), _GridSide()
        kk = k0
        while True:
            pos.extend(gen, kk, h, sqrt_h)
            neg.extend(gen, kk, h, sqrt_h)
            big = max(0.0, pos.vmax, neg.vmax)
            if pos.last <= big - margin and neg.last <= big - margin:
                break
            knew = int(math.ceil(kk * growth))
            if 2 * knew + 1 > max_points:
                truncated[r] = 1
                break
            kk = knew
        ep, en = math.exp(pos.vmax - big), math.exp(neg.vmax - big)
        s0 = math.exp(-big) + pos.s0 * ep + neg.s0 * en
        zeta[r] = (pos.s1 * ep - neg.s1 * en) / s0
        vbest, kbest, sign = 0.0, 0, 1.0
        if neg.vmax > vbest:
            vbest, kbest, sign = neg.vmax, neg.kmax, -1.0
        if pos.vmax > vbest or (pos.vmax == vbest and pos.kmax < kbest):
            vbest, kbest, sign = pos.vmax, pos.kmax, 1.0
        xi[r] = sign * (kbest * h)
        window[r] = kk * h
    return zeta, xi, window, truncated
