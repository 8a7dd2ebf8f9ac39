"""Compiled vs pure-numpy kernels on fixed workloads.

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Both backends consume the same draws from the same streams, so each row
times identical work. Reports the best of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from llr_lab import kernels
from llr_lab.rng import SeedSpec, derive_stream

SEED = SeedSpec(7)


def workloads(scale: float):
    n = lambda k: max(1, int(k * scale))
    return [
        ("poisson rho=1", "poisson_batch", (1.0, n(2000), 40.0, 10**8)),
        ("poisson rho=0.1", "poisson_batch", (0.1, n(40), 40.0, 10**8)),
        ("poisson rho=10", "poisson_batch", (10.0, n(20000), 40.0, 10**8)),
        ("tail sups rho=0.5", "poisson_tail_batch",
         (0.5, np.array([20.0, 40.0]), n(500), 40.0, 10**8)),
        ("ladder sup rho=1", "side_sup_batch", (1.0 / (1 - np.exp(-1.0)), -1.0, n(2000), 40.0, 10**8)),
        ("brownian h=0.01", "brownian_batch", (0.01, 50.0, 2.0, 40.0, 10**6, n(40))),
    ]


def best_time(fn, args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        s = derive_stream(SEED, 0)
        t0 = time.perf_counter()
        fn(s.bit_generator, *args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--scale", type=float, default=1.0, help="multiply replication counts")
    args = p.parse_args(argv)
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'workload':<20}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for label, name, fargs in workloads(args.scale):
        times = {b: best_time(getattr(kernels.get_backend(b), name), fargs, args.repeat)
                 for b in backends}
        line = f"{label:<20}" + "".join(f"{times[b]:>11.3f}s" for b in backends)
        if "compiled" in times:
            line += f"{times['python'] / times['compiled']:>9.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
