"""Command-line front end: ``llr-lab <sweep|limits|analytic|validate>``.

Exit codes: 0 ok, 1 validation failure, 2 I/O error, 3 rejected rows or
failed run, 4 usage error or invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analytic, validation
from .errors import LLRError, ParameterError, RunError
from .limits import BrownianGridConfig
from .montecarlo import (DEFAULT_CHUNK, BrownianModel, EstimateRow, InfinityModel, model_seed,
                         run_replications, sweep)
from .poisson import TruncationPolicy
from .rng import SeedSpec

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2, 3, 4

CSV_HEADER = ["rho", "N", "B", "se_B", "M", "se_M", "E", "se_E", "rho2B", "rho2M", "truncated"]
DEFAULT_GRID = "0.05:20:24"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_grid(value) -> list[float]:
    """``a:b:n`` (n log-spaced points from a to b), a comma list, or a list of numbers."""
    try:
        if isinstance(value, (list, tuple)):
            grid = [float(v) for v in value]
        elif ":" in value:
            a, b, n = value.split(":")
            a, b, n = float(a), float(b), int(n)
            if n < 1 or not 0 < a <= b:
                raise UsageError(f"bad grid range {value!r}")
            grid = [a] if n == 1 else [float(v) for v in np.geomspace(a, b, n)]
        else:
            grid = [float(v) for v in value.split(",") if v.strip()]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"cannot parse rho grid {value!r}: {exc}") from None
    if any(not (math.isfinite(r) and r > 0) for r in grid):
        raise UsageError("rho grid values must be finite and positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("rho grid must be strictly increasing")
    return grid


@dataclass
class RunConfig:
    subcommand: str
    rho_grid: list = field(default_factory=lambda: parse_grid(DEFAULT_GRID))
    n: int = 100_000
    n_infinity: int = 1_000_000
    seed: int = validation.DEFAULT_SEED
    chunk: int = DEFAULT_CHUNK
    margin: float = 40.0
    h: float = 0.005
    A0: float = 50.0
    out: str | None = None
    format: str = "csv"
    quick: bool = False
    workers: int = 1
    with_limits: bool = False
    backend: str | None = None
    checks: list | None = None

    def __post_init__(self):
        for name in ("n", "n_infinity", "chunk", "workers"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise UsageError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise UsageError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        for name in ("margin", "h", "A0"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise UsageError(f"{name} must be a positive number, got {v!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.format!r}")
        if self.backend not in (None, "compiled", "python"):
            raise UsageError(f"backend must be compiled or python, got {self.backend!r}")
        self.rho_grid = parse_grid(self.rho_grid)
        try:
            self.policy = TruncationPolicy(log_margin=float(self.margin))
            self.brownian = BrownianGridConfig(h=float(self.h), A0=float(self.A0),
                                               log_margin=float(self.margin))
        except ParameterError as exc:
            raise UsageError(str(exc)) from None


CONFIG_KEYS = {"rho_grid", "n", "n_infinity", "seed", "chunk", "margin", "h", "A0", "out",
               "format", "quick", "workers", "with_limits", "backend", "checks"}


def load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def _common(p):
    p.add_argument("--rho-grid", dest="rho_grid", help="a:b:n log-spaced or comma list")
    p.add_argument("--n", type=int, help="replications per row")
    p.add_argument("--seed", type=int, help="root seed")
    p.add_argument("--chunk", type=int, help="replications per substream chunk")
    p.add_argument("--margin", type=float, help="truncation log-margin")
    p.add_argument("--h", type=float, help="Brownian grid step")
    p.add_argument("--A0", type=float, help="initial Brownian half-window")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--quick", action="store_true", default=None)
    p.add_argument("--workers", type=int, help="worker threads")
    p.add_argument("--with-limits", dest="with_limits", action="store_true", default=None)
    p.add_argument("--backend", choices=["compiled", "python"])
    p.add_argument("--config", help="JSON file with any of the options above")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="llr-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = sub.add_parser("sweep", help="estimate B, M, E over a rho grid")
    _common(p)
    p = sub.add_parser("limits", help="Brownian and degenerate limits vs exact constants")
    _common(p)
    p.add_argument("--n-infinity", dest="n_infinity", type=int,
                   help="replications for the degenerate limit (default 10^6)")
    p = sub.add_parser("analytic", help="evaluate a closed-form expression")
    p.add_argument("formula", help=", ".join(ANALYTIC))
    p.add_argument("params", nargs="*", help="numeric arguments")
    p = sub.add_parser("validate", help="run the acceptance checks")
    _common(p)
    p.add_argument("--check", dest="checks", type=int, action="append",
                   help="run only this check number (repeatable)")
    return parser


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def row_record(row: EstimateRow) -> dict:
    return {"rho": row.rho, "N": row.N, "B": row.B_hat, "se_B": row.se_B, "M": row.M_hat,
            "se_M": row.se_M, "E": row.E_hat, "se_E": row.se_E, "rho2B": row.rho2B,
            "rho2M": row.rho2M, "truncated": row.truncated_count}


def render(rows, fmt: str) -> str:
    records = [row_record(r) for r in rows]
    if fmt == "json":
        # infinity is not valid JSON; the degenerate-limit row carries the string "inf"
        for rec in records:
            if rec["rho"] == math.inf:
                rec["rho"] = "inf"
        return json.dumps(records, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow([_fmt(rec[k]) for k in CSV_HEADER])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _rejected(rows) -> int:
    bad = [r for r in rows if not r.accepted]
    for r in bad:
        print(f"rejected row rho={r.rho!r}: {r.truncated_count} of {r.N} replications truncated",
              file=sys.stderr)
    return EXIT_REJECTED if bad else EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    rows = sweep(cfg.rho_grid, cfg.n, SeedSpec(cfg.seed), cfg.policy, chunk_size=cfg.chunk,
                 workers=cfg.workers, include_limits=cfg.with_limits, brownian=cfg.brownian,
                 backend=cfg.backend)
    emit(render(rows, cfg.format), cfg.out)
    return _rejected(rows)


def cmd_limits(cfg: RunConfig) -> int:
    c = analytic.limit_constants()
    seed = SeedSpec(cfg.seed)
    bm, im = BrownianModel(cfg.brownian), InfinityModel()
    brown = run_replications(bm, cfg.n, model_seed(seed, bm), cfg.chunk, cfg.workers, cfg.backend)
    inf = run_replications(im, cfg.n_infinity, model_seed(seed, im), cfg.chunk, cfg.workers)
    lines = [f"{'model':<10}{'N':>9}  {'estimate':>22}{'exact':>14}{'z':>9}"]
    for label, row, targets in (("brownian", brown, (c.B0, c.M0, c.E0)),
                                ("infinity", inf, (c.B_inf, c.M_inf, c.E_inf))):
        for name, est, se, exact in zip("BME", (row.B_hat, row.M_hat, row.E_hat),
                                        (row.se_B, row.se_M, row.se_E), targets):
            z = (est - exact) / se if se > 0 else math.nan
            lines.append(f"{label:<10}{row.N:>9}  {name} {est:>10.6f} +- {se:<8.6f}"
                         f"{exact:>12.6f}{z:>9.2f}")
    lines.append(f"zeta(3) = {c.zeta3:.15g}")
    sys.stdout.write("\n".join(lines) + "\n")
    if cfg.out is not None:
        emit(render([brown, inf], cfg.format), cfg.out)
    return _rejected([brown, inf])


def _constants():
    c = analytic.limit_constants()
    return [("zeta3", c.zeta3), ("B0", c.B0), ("M0", c.M0), ("E0", c.E0),
            ("B_inf", c.B_inf), ("M_inf", c.M_inf), ("E_inf", c.E_inf)]


def _log_increment(rho, delta, side="positive"):
    mean, second = analytic.log_increment_moments(rho, delta, side)
    return [("mean", mean), ("second_moment", second)]


ANALYTIC = {
    "half_moment": (lambda rho, y: analytic.half_moment(rho, y), "rho y"),
    "quarter_moment": (lambda rho, y: analytic.quarter_moment(rho, y), "rho y"),
    "sqrt_increment": (lambda rho, y1, y2: analytic.sqrt_increment_second_moment(rho, y1, y2),
                       "rho y1 y2"),
    "log_increment": (_log_increment, "rho delta [positive|negative]"),
    "eta_tail": (lambda rho, x: analytic.eta_tail(rho, x), "rho x"),
    "eta_quarter": (lambda rho: analytic.eta_exp_quarter_moment(rho), "rho"),
    "ladder": (lambda lam: analytic.solve_ladder_rate(lam), "lambda_prime"),
    "constants": (_constants, ""),
}


def cmd_analytic(formula: str, params: list[str]) -> int:
    if formula not in ANALYTIC:
        raise UsageError(f"unknown formula {formula!r}; choose from {', '.join(ANALYTIC)}")
    fn, signature = ANALYTIC[formula]
    names = signature.split()
    args = []
    for i, p in enumerate(params):
        if names[i:i + 1] == ["[positive|negative]"]:
            args.append(p)
            continue
        try:
            args.append(float(p))
        except ValueError:
            raise UsageError(f"{formula}: {p!r} is not a number") from None
    required = [n for n in names if not n.startswith("[")]
    if not len(required) <= len(args) <= len(names):
        raise UsageError(f"usage: llr-lab analytic {formula} {signature}".rstrip())
    try:
        value = fn(*args)
    except ParameterError as exc:
        raise UsageError(f"{formula}: {exc}") from None
    if isinstance(value, list):
        for name, v in value:
            print(f"{name} {v:.12g}")
    else:
        print(f"{value:.12g}")
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    if cfg.checks and any(c not in validation.CHECKS for c in cfg.checks):
        raise UsageError(f"check numbers must be in 1..{len(validation.CHECKS)}")
    results = validation.run_all(SeedSpec(cfg.seed), quick=cfg.quick, workers=cfg.workers,
                                 backend=cfg.backend, only=cfg.checks,
                                 report=lambda s: print(s, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed"
          + (f"; failed: {failed}" if failed else ""))
    return EXIT_VALIDATION if failed else EXIT_OK


def make_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(args.subcommand, **values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "analytic":
            return cmd_analytic(args.formula, args.params)
        cfg = make_config(args)
        return {"sweep": cmd_sweep, "limits": cmd_limits, "validate": cmd_validate}[
            args.subcommand](cfg)
    except UsageError as exc:
        print(f"llr-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"llr-lab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RunError as exc:
        print(f"llr-lab: run failed: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except LLRError as exc:
        print(f"llr-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
