# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Same signatures and draw order as :mod:`llr_lab._fallback`. Randomness comes
from the caller's numpy bit generator through its C capsule, so both backends
consume identical raw draws. Sums are streamed here (no event storage) while
the fallback sums stored arrays, so floating-point results agree to rounding,
not bit for bit.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, expm1, log1p, sqrt, ceil, INFINITY
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

cnp.import_array()

BACKEND = "compiled"

cdef enum:
    MAX_THRESHOLDS = 16

# A grid term e^{v - vmax} below e^-60 cannot change s0 >= 1, and x e^{v - vmax}
# cannot change s1 >= h for windows under 1e6 * h: skipping its exp is exact.
cdef double SKIP_BELOW = 60.0


cdef struct SideWalk:
    long long n
    double vmax
    double t_at_max
    double s0
    double s1
    double last
    bint truncated


cdef bitgen_t* _bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef SideWalk _walk(bitgen_t* rng, double rate, double jump, double margin,
                    long long max_events, const double* thr, int n_thr,
                    double* tail) noexcept nogil:
    # value after event i: jump*i + drift*t_i + offset; drift opposes the jumps,
    # offset turns down-jump sides into left limits at the events
    cdef SideWalk w
    cdef double drift = -1.0 if jump > 0 else 1.0
    cdef double offset = -jump if jump < 0 else 0.0
    cdef double horizon = 0.0
    cdef double t = 0.0, v = 0.0, run = 0.0, e
    cdef long long i = 0
    cdef int j
    cdef bint crossed[MAX_THRESHOLDS]
    for j in range(n_thr):
        crossed[j] = 0
        if thr[j] > horizon:
            horizon = thr[j]
    w.vmax = -INFINITY
    w.t_at_max = 0.0
    w.s0 = 0.0
    w.s1 = 0.0
    w.truncated = 0
    while True:
        t += -log1p(-rng.next_double(rng.state)) / rate
        i += 1
        v = jump * i + drift * t + offset
        for j in range(n_thr):
            if t > thr[j]:
                if not crossed[j]:
                    crossed[j] = 1
                    tail[j] = jump * (i - 1) + drift * thr[j]
                if v > tail[j]:
                    tail[j] = v
        if v > w.vmax:
            e = exp(w.vmax - v)
            w.s0 = w.s0 * e + 1.0
            w.s1 = w.s1 * e + t
            w.vmax = v
            w.t_at_max = t
        else:
            e = exp(v - w.vmax)
            w.s0 += e
            w.s1 += t * e
        if v > run:
            run = v
        if t > horizon and v <= run - margin and v <= -margin:
            break
        if i >= max_events:
            w.truncated = 1
            break
    w.n = i
    w.last = v
    return w


def poisson_batch(bit_generator, double rho, Py_ssize_t n, double margin,
                  long long max_events):
    """Draw ``n`` replications of (zeta, xi) for the two-sided Poisson process.

    Returns ``(zeta, xi, pos_used, neg_used, residual, truncated)`` arrays.
    """
    cdef double lam_p = 1.0 / expm1(rho)
    cdef double lam_n = -1.0 / expm1(-rho)
    cdef cnp.ndarray[double] zeta = np.empty(n)
    cdef cnp.ndarray[double] xi = np.empty(n)
    cdef cnp.ndarray[long long] pos_used = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[long long] neg_used = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[double] residual = np.empty(n)
    cdef cnp.ndarray[cnp.uint8_t] truncated = np.zeros(n, dtype=np.uint8)
    cdef double[::1] zv = zeta, xv = xi, rv = residual
    cdef long long[::1] pv = pos_used, nv = neg_used
    cdef cnp.uint8_t[::1] tv = truncated
    cdef bitgen_t* rng = _bitgen(bit_generator)
    cdef SideWalk p, q
    cdef double big, ep, en, s0p, s1p, s0n, s1n
    cdef Py_ssize_t r
    with bit_generator.lock, nogil:
        for r in range(n):
            p = _walk(rng, lam_p, rho, margin, max_events, NULL, 0, NULL)
            q = _walk(rng, lam_n, -rho, margin, max_events, NULL, 0, NULL)
            big = p.vmax if p.vmax > q.vmax else q.vmax
            ep = exp(p.vmax - big)
            en = exp(q.vmax - big)
            s0p = p.s0 * ep
            s1p = p.s1 * ep
            s0n = q.s0 * en
            s1n = q.s1 * en
            zv[r] = (s1p + s0p - s1n + s0n) / (s0p + s0n)
            xv[r] = p.t_at_max if p.vmax > q.vmax else -q.t_at_max
            pv[r] = p.n
            nv[r] = q.n
            rv[r] = (p.last if p.last > q.last else q.last) - big
            tv[r] = p.truncated or q.truncated
    return zeta, xi, pos_used, neg_used, residual, truncated


def poisson_tail_batch(bit_generator, double rho, thresholds, Py_ssize_t n,
                       double margin, long long max_events):
    """Supremum of ln Z beyond each |x| threshold, per replication.

    Returns ``(sups, truncated)`` with ``sups`` of shape ``(n, len(thresholds))``.
    """
    cdef double[::1] thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef int n_thr = thr.shape[0]
    if n_thr < 1 or n_thr > MAX_THRESHOLDS:
        raise ValueError(f"need between 1 and {MAX_THRESHOLDS} thresholds")
    cdef double lam_p = 1.0 / expm1(rho)
    cdef double lam_n = -1.0 / expm1(-rho)
    sups = np.empty((n, n_thr))
    cdef double[:, ::1] sv = sups
    cdef cnp.ndarray[cnp.uint8_t] truncated = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] tv = truncated
    cdef double tail_p[MAX_THRESHOLDS]
    cdef double tail_n[MAX_THRESHOLDS]
    cdef bitgen_t* rng = _bitgen(bit_generator)
    cdef SideWalk p, q
    cdef Py_ssize_t r
    cdef int j
    with bit_generator.lock, nogil:
        for r in range(n):
            p = _walk(rng, lam_p, rho, margin, max_events, &thr[0], n_thr, tail_p)
            q = _walk(rng, lam_n, -rho, margin, max_events, &thr[0], n_thr, tail_n)
            for j in range(n_thr):
                sv[r, j] = tail_p[j] if tail_p[j] > tail_n[j] else tail_n[j]
            tv[r] = p.truncated or q.truncated
    return sups, truncated


def side_sup_batch(bit_generator, double rate, double jump, Py_ssize_t n,
                   double margin, long long max_events):
    """All-time supremum of ``jump * Pi_rate(t) - sign(jump) * t`` (origin included).

    Left limits are used for down-jumps. Returns ``(sups, truncated)``.
    """
    cdef cnp.ndarray[double] sups = np.empty(n)
    cdef cnp.ndarray[cnp.uint8_t] truncated = np.zeros(n, dtype=np.uint8)
    cdef double[::1] sv = sups
    cdef cnp.uint8_t[::1] tv = truncated
    cdef bitgen_t* rng = _bitgen(bit_generator)
    cdef SideWalk w
    cdef Py_ssize_t r
    with bit_generator.lock, nogil:
        for r in range(n):
            w = _walk(rng, rate, jump, margin, max_events, NULL, 0, NULL)
            sv[r] = w.vmax if w.vmax > 0.0 else 0.0
            tv[r] = w.truncated
    return sups, truncated


cdef struct GridSide:
    long long k
    double w
    double vmax
    long long kmax
    double s0
    double s1
    double last


cdef inline void _grid_init(GridSide* g) noexcept nogil:
    g.k = 0
    g.w = 0.0
    g.vmax = -INFINITY
    g.kmax = 0
    g.s0 = 0.0
    g.s1 = 0.0
    g.last = 0.0


cdef void _grid_extend(bitgen_t* rng, GridSide* g, long long upto, double h,
                       double sqrt_h) noexcept nogil:
    cdef double x, v, e
    while g.k < upto:
        g.w = g.w + sqrt_h * random_standard_normal(rng)
        g.k += 1
        x = g.k * h
        v = g.w - 0.5 * x
        if v > g.vmax:
            e = exp(g.vmax - v)
            g.s0 = g.s0 * e + 1.0
            g.s1 = g.s1 * e + x
            g.vmax = v
            g.kmax = g.k
        elif v > g.vmax - SKIP_BELOW:
            e = exp(v - g.vmax)
            g.s0 += e
            g.s1 += x * e
        g.last = v


def brownian_batch(bit_generator, double h, double a0, double growth,
                   double margin, long long max_points, Py_ssize_t n):
    """Grid functionals of exp(W(x) - |x|/2) for ``n`` replications.

    Returns ``(zeta, xi, window, truncated)`` arrays.
    """
    cdef long long k0 = <long long> ceil(a0 / h - 1e-9)
    cdef double sqrt_h = sqrt(h)
    cdef cnp.ndarray[double] zeta = np.empty(n)
    cdef cnp.ndarray[double] xi = np.empty(n)
    cdef cnp.ndarray[double] window = np.empty(n)
    cdef cnp.ndarray[cnp.uint8_t] truncated = np.zeros(n, dtype=np.uint8)
    cdef double[::1] zv = zeta, xv = xi, wv = window
    cdef cnp.uint8_t[::1] tv = truncated
    cdef bitgen_t* rng = _bitgen(bit_generator)
    cdef GridSide pos, neg
    cdef long long kk, knew, kbest
    cdef double big, s0, s1, ep, en, vbest, sign
    cdef Py_ssize_t r
    with bit_generator.lock, nogil:
        for r in range(n):
            _grid_init(&pos)
            _grid_init(&neg)
            kk = k0
            while True:
                _grid_extend(rng, &pos, kk, h, sqrt_h)
                _grid_extend(rng, &neg, kk, h, sqrt_h)
                big = 0.0
                if pos.vmax > big:
                    big = pos.vmax
                if neg.vmax > big:
                    big = neg.vmax
                if pos.last <= big - margin and neg.last <= big - margin:
                    break
                knew = <long long> ceil(kk * growth)
                if 2 * knew + 1 > max_points:
                    tv[r] = 1
                    break
                kk = knew
            ep = exp(pos.vmax - big)
            en = exp(neg.vmax - big)
            s0 = exp(-big) + pos.s0 * ep + neg.s0 * en
            s1 = pos.s1 * ep - neg.s1 * en
            zv[r] = s1 / s0
            # ties: smaller |x| first, then the negative side
            vbest = 0.0
            kbest = 0
            sign = 1.0
            if neg.vmax > vbest:
                vbest = neg.vmax
                kbest = neg.kmax
                sign = -1.0
            if pos.vmax > vbest or (pos.vmax == vbest and pos.kmax < kbest):
                vbest = pos.vmax
                kbest = pos.kmax
                sign = 1.0
            xv[r] = sign * (kbest * h)
            wv[r] = kk * h
    return zeta, xi, window, truncated
