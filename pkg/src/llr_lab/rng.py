"""Deterministic, splittable random streams.

A stream is addressed by a root seed plus a path of 64-bit indices. The path
is fed to :class:`numpy.random.SeedSequence` as its spawn key, so deriving a
child is O(1), needs no shared state and gives the same generator no matter
which process or thread builds it. Every stream drives a PCG64 bit generator;
the compiled kernels read the same bit generator through numpy's C API, so a
stream yields the same variates whichever backend consumes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_U64 = 2**64


def _check_u64(value: int, what: str) -> int:
    if isinstance(value, (bool, float)) or not isinstance(value, (int, np.integer)):
        raise ParameterError(f"{what} must be an integer, got {value!r}")
    value = int(value)
    if not 0 <= value < _U64:
        raise ParameterError(f"{what} must fit in 64 unsigned bits, got {value}")
    return value


@dataclass(frozen=True)
class SeedSpec:
    """Root seed plus the path of stream indices leading to one substream."""

    root_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "root_seed", _check_u64(self.root_seed, "root_seed"))
        object.__setattr__(
            self, "path", tuple(_check_u64(i, "stream index") for i in self.path)
        )

    def child(self, index: int) -> SeedSpec:
        return SeedSpec(self.root_seed, self.path + (_check_u64(index, "stream index"),))

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.root_seed, spawn_key=self.path)


class Stream:
    """Single-owner random stream.

    ``draws`` counts the variates handed out by the methods below; kernels
    that read :attr:`bit_generator` directly do not update it.
    """

    def __init__(self, seed: SeedSpec):
        self.seed = seed
        self.bit_generator = np.random.PCG64(seed.seed_sequence())
        self.generator = np.random.Generator(self.bit_generator)
        self.draws = 0

    def __repr__(self):
        return f"Stream(root_seed={self.seed.root_seed}, path={self.seed.path})"

    def _count(self, size):
        self.draws += 1 if size is None else int(np.prod(size))

    def uniform(self, size=None):
        """Unit uniforms on [0, 1), one raw 64-bit draw each."""
        self._count(size)
        return self.generator.random(size)

    def exponential(self, rate: float, size=None):
        _check_rate(rate)
        return exponential_from_uniform(self.uniform(size), rate)

    def standard_normal(self, size=None):
        self._count(size)
        return self.generator.standard_normal(size)

    def poisson(self, lam, size=None):
        self._count(size)
        return self.generator.poisson(lam, size)


def _check_rate(rate: float) -> None:
    if not (isinstance(rate, (int, float, np.floating)) and math.isfinite(rate) and rate > 0):
        raise ParameterError(f"rate must be positive and finite, got {rate!r}")


def exponential_from_uniform(u, rate: float):
    """Inverse-CDF map ``-ln(1 - u) / rate``; the compiled kernels use the same expression."""
    return -np.log1p(-np.asarray(u, dtype=float)) / rate if np.ndim(u) else -math.log1p(-u) / rate


def derive_stream(seed: SeedSpec, index: int) -> Stream:
    """Stream for ``seed.path + (index,)``; same arguments, same stream."""
    return Stream(seed.child(index))


def root_stream(seed: SeedSpec) -> Stream:
    return Stream(seed)


def sample_unit_uniform(s: Stream) -> float:
    return float(s.uniform())


def sample_exponential(s: Stream, rate: float) -> float:
    return float(s.exponential(rate))


def sample_standard_normal(s: Stream) -> float:
    return float(s.standard_normal())
