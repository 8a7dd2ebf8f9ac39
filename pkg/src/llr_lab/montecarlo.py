"""Deterministic replication engine and distribution-test utilities.

Replications are cut into fixed-size chunks; chunk ``c`` draws from the
substream ``derive(seed, c)``. Chunk accumulators hold *exact* power sums
(integers scaled by 2**1127, which represents every float64 exactly), so
merging is integer addition: the result does not depend on how samples were
split, on the number of workers, or on completion order.
"""

from __future__ import annotations

import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import limits
from .errors import ParameterError, RunError
from .limits import BrownianGridConfig
from .poisson import RhoParam, TruncationPolicy
from .rng import SeedSpec, derive_stream
from . import kernels

DEFAULT_CHUNK = 4096
MAX_TRUNCATED_FRACTION = 1e-4

_SHIFT = 1127  # 1074 subnormal bits + 53 mantissa bits
_HALF = 26
_LOW_MASK = (1 << _HALF) - 1


def exact_sum(values) -> int:
    """Exact sum of float64 values as an integer scaled by ``2**1127``."""
    a = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
    if a.size == 0:
        return 0
    if not np.all(np.isfinite(a)):
        raise ParameterError("cannot accumulate non-finite values")
    mant, expo = np.frexp(a)
    ints = (mant * 2.0**53).astype(np.int64)  # exact: |ints| < 2**53
    shift = expo.astype(np.int64) + (_SHIFT - 53)
    sign = np.sign(ints)
    mag = np.abs(ints)
    lo = shift.min()
    idx = shift - lo
    # split mantissas so float64 bincount sums stay exact for < 2**26 values
    hi_sum = np.bincount(idx, weights=(sign * (mag >> _HALF)).astype(np.float64))
    lo_sum = np.bincount(idx, weights=(sign * (mag & _LOW_MASK)).astype(np.float64))
    total = 0
    for j in np.flatnonzero((hi_sum != 0) | (lo_sum != 0)):
        total += ((int(hi_sum[j]) << _HALF) + int(lo_sum[j])) << int(j + lo)
    return total


class MomentAccumulator:
    """Moments of (zeta^2, xi^2) needed for B, M, E and their standard errors.

    Stores exact sums of zeta^2, xi^2, zeta^4, xi^4 and zeta^2 xi^2; the
    running means and centred moments are derived on demand.
    """

    __slots__ = ("n", "_z2", "_x2", "_z4", "_x4", "_zx")

    def __init__(self):
        self.n = 0
        self._z2 = self._x2 = self._z4 = self._x4 = self._zx = 0

    @classmethod
    def from_arrays(cls, zeta, xi) -> MomentAccumulator:
        z2 = np.square(np.asarray(zeta, dtype=np.float64))
        x2 = np.square(np.asarray(xi, dtype=np.float64))
        if z2.shape != x2.shape:
            raise ParameterError("zeta and xi must have the same length")
        acc = cls()
        acc.n = int(z2.size)
        acc._z2, acc._x2 = exact_sum(z2), exact_sum(x2)
        acc._z4, acc._x4 = exact_sum(z2 * z2), exact_sum(x2 * x2)
        acc._zx = exact_sum(z2 * x2)
        return acc

    def update(self, zeta: float, xi: float) -> None:
        self.merge(MomentAccumulator.from_arrays([zeta], [xi]))

    def merge(self, other: MomentAccumulator) -> MomentAccumulator:
        self.n += other.n
        self._z2 += other._z2
        self._x2 += other._x2
        self._z4 += other._z4
        self._x4 += other._x4
        self._zx += other._zx
        return self

    def __eq__(self, other):
        if not isinstance(other, MomentAccumulator):
            return NotImplemented
        return self.state() == other.state()

    def state(self) -> tuple[int, ...]:
        return (self.n, self._z2, self._x2, self._z4, self._x4, self._zx)

    def _mean(self, s: int) -> Fraction:
        return Fraction(s, self.n << _SHIFT)

    def _centered(self, s_ab: int, s_a: int, s_b: int) -> Fraction:
        # sum (a - mean_a)(b - mean_b) = sum ab - sum a * sum b / n
        scale = 1 << _SHIFT
        return Fraction(s_ab, scale) - Fraction(s_a * s_b, self.n * scale * scale)

    @property
    def mean_z2(self) -> float:
        return float(self._mean(self._z2)) if self.n else math.nan

    @property
    def mean_x2(self) -> float:
        return float(self._mean(self._x2)) if self.n else math.nan

    @property
    def m2_z2(self) -> float:
        return float(self._centered(self._z4, self._z2, self._z2)) if self.n else math.nan

    @property
    def m2_x2(self) -> float:
        return float(self._centered(self._x4, self._x2, self._x2)) if self.n else math.nan

    @property
    def cross(self) -> float:
        return float(self._centered(self._zx, self._z2, self._x2)) if self.n else math.nan


@dataclass(frozen=True)
class EstimateRow:
    """One grid point: second-moment estimates, their ratio and standard errors.

    ``rho`` is 0.0 for the Brownian limit and ``inf`` for the degenerate one;
    ``rho2B`` / ``rho2M`` are None for those rows.
    """

    rho: float
    N: int
    B_hat: float
    se_B: float
    M_hat: float
    se_M: float
    E_hat: float
    se_E: float
    rho2B: float | None
    rho2M: float | None
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0))
    truncated_count: int = 0

    @property
    def accepted(self) -> bool:
        return self.truncated_count <= MAX_TRUNCATED_FRACTION * self.N

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seed"] = {"root_seed": self.seed.root_seed, "path": list(self.seed.path)}
        return d

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=True).encode()


def estimate_row(acc: MomentAccumulator, rho: float, N: int, seed: SeedSpec,
                 truncated: int = 0) -> EstimateRow:
    """Turn an accumulator into B, M, E with delta-method standard errors."""
    n = acc.n
    if n < 2:
        raise RunError(f"only {n} usable replications")
    b, m = acc.mean_z2, acc.mean_x2
    var_z, var_x, cov = acc.m2_z2 / (n - 1), acc.m2_x2 / (n - 1), acc.cross / (n - 1)
    e = b / m
    var_e = (var_z / m**2 + b**2 * var_x / m**4 - 2.0 * b * cov / m**3) / n
    finite = 0.0 < rho < math.inf
    return EstimateRow(
        rho=float(rho), N=int(N), B_hat=b, se_B=math.sqrt(var_z / n),
        M_hat=m, se_M=math.sqrt(var_x / n), E_hat=e, se_E=math.sqrt(max(var_e, 0.0)),
        rho2B=rho**2 * b if finite else None, rho2M=rho**2 * m if finite else None,
        seed=seed, truncated_count=int(truncated),
    )


@dataclass(frozen=True)
class PoissonModel:
    rho: float
    policy: TruncationPolicy = TruncationPolicy()

    def __post_init__(self):
        RhoParam(self.rho)

    tag = 1

    @property
    def row_rho(self) -> float:
        return float(self.rho)

    def simulate(self, stream, n, backend=None):
        k = kernels.get_backend(backend)
        zeta, xi, _, _, _, cut = k.poisson_batch(
            stream.bit_generator, float(self.rho), n,
            self.policy.log_margin, int(self.policy.max_events))
        return zeta, xi, cut.astype(bool)


@dataclass(frozen=True)
class BrownianModel:
    cfg: BrownianGridConfig = BrownianGridConfig()

    tag = 2
    row_rho = 0.0

    def simulate(self, stream, n, backend=None):
        zeta, xi, _, cut = limits.brownian_batch(self.cfg, stream, n, backend)
        return zeta, xi, cut.astype(bool)


@dataclass(frozen=True)
class InfinityModel:
    tag = 3
    row_rho = math.inf

    def simulate(self, stream, n, backend=None):
        zeta, xi, _ = limits.infinity_batch(stream, n)
        return zeta, xi, np.zeros(n, dtype=bool)


Model = PoissonModel | BrownianModel | InfinityModel


def _float_index(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def model_seed(seed: SeedSpec, model: Model) -> SeedSpec:
    """Substream dedicated to one model; Poisson rows are keyed by the bits of rho."""
    s = seed.child(model.tag)
    return s.child(_float_index(model.rho)) if isinstance(model, PoissonModel) else s


def _run_chunk(model, seed, c, size, backend):
    zeta, xi, cut = model.simulate(derive_stream(seed, c), size, backend)
    keep = ~cut
    return MomentAccumulator.from_arrays(zeta[keep], xi[keep]), int(cut.sum())


def run_replications(model: Model, N: int, seed: SeedSpec, chunk_size: int = DEFAULT_CHUNK,
                     workers: int = 1, backend: str | None = None) -> EstimateRow:
    """Estimate B, M and E from ``N`` replications of ``model``.

    Chunks may run on ``workers`` threads (the compiled kernels release the
    GIL); results are merged in chunk order and are identical for any
    worker count.
    """
    if N < 100:
        raise ParameterError(f"need at least 100 replications, got {N}")
    if chunk_size < 1:
        raise ParameterError(f"chunk_size must be positive, got {chunk_size}")
    sizes = [min(chunk_size, N - start) for start in range(0, N, chunk_size)]

    def job(c):
        return _run_chunk(model, seed, c, sizes[c], backend)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(c) for c in range(len(sizes))]
    acc, truncated = MomentAccumulator(), 0
    for part, cut in parts:
        acc.merge(part)
        truncated += cut
    if acc.n == 0:
        raise RunError("every replication was truncated")
    return estimate_row(acc, model.row_rho, N, seed, truncated)


def sweep(rho_grid: Sequence[float], N: int, seed: SeedSpec,
          policy: TruncationPolicy = TruncationPolicy(), *, chunk_size: int = DEFAULT_CHUNK,
          workers: int = 1, include_limits: bool = False,
          brownian: BrownianGridConfig = BrownianGridConfig(),
          backend: str | None = None) -> list[EstimateRow]:
    """One row per rho (plus the Brownian and degenerate rows if requested).

    Each row draws from its own substream keyed by the value of rho, so a row
    does not depend on which other grid points are present.
    """
    grid = [float(r) for r in rho_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("rho grid must be strictly increasing")
    models: list[Model] = [PoissonModel(r, policy) for r in grid]
    if include_limits:
        models = [BrownianModel(brownian)] + models + [InfinityModel()]
    return [run_replications(m, N, model_seed(seed, m), chunk_size, workers, backend)
            for m in models]


def ks_statistic(samples: Sequence[float], cdf: Callable) -> float:
    """One-sample Kolmogorov-Smirnov distance sup |F_n - F|."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n == 0:
        raise ParameterError("KS statistic needs at least one sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_pvalue(d: float, n: int) -> float:
    """Exact two-sided p-value of a KS distance ``d`` at sample size ``n``."""
    return float(stats.kstwo.sf(d, n))
