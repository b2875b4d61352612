"""Replicate sweeps over N, R or t feeding the regime fits."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import PreconditionError
from .lattice import Lattice
from .pointgen import (PointSet, choose_spectrum, gen_dpp, gen_jittered, gen_sublattice, gen_uniform,
                       make_partition)
from .regime import RegimeReport, fit_regime
from .rng import RngSpec, replicate_map
from .variance import (VarianceEstimate, pair_sum_variance, variance_montecarlo, variance_realspace,
                       variance_spectral)

GENERATORS = ("uniform", "jittered", "sublattice", "dpp")
METHODS = ("realspace", "spectral", "montecarlo", "pairsum")
# replicates of different sweep points use disjoint stream ranges
STREAM_STRIDE = 1 << 20


@dataclass
class SweepRow:
    generator: str
    d: int
    N: int
    R_or_t: float
    replicate: int
    variance: float
    error: float


def grid_side(N: int, d: int) -> int:
    """``m`` with ``m^d == N``; grid generators need a perfect power."""
    m = int(round(N ** (1.0 / d)))
    for cand in (m - 1, m, m + 1):
        if cand >= 1 and cand**d == N:
            return cand
    raise PreconditionError(f"N={N} is not a perfect {d}-th power")


def make_points(L: Lattice, generator: str, N: int, rng: RngSpec) -> PointSet:
    if generator == "uniform":
        return gen_uniform(L, N, rng)
    if generator == "jittered":
        return gen_jittered(make_partition(L, grid_side(N, L.dim)), rng)
    if generator == "sublattice":
        return gen_sublattice(L, grid_side(N, L.dim))
    if generator == "dpp":
        return gen_dpp(choose_spectrum(L, N), rng)
    raise PreconditionError(f"unknown generator {generator!r}; expected one of {GENERATORS}")


def estimate(X: PointSet, R: float, method: str, tol: float = 1e-3, samples: int = 10_000,
             rng: RngSpec | None = None) -> VarianceEstimate:
    if method == "realspace":
        return variance_realspace(X, R)
    if method == "pairsum":
        return VarianceEstimate(pair_sum_variance(X, R), "realspace", 0.0, {"R": R, "N": X.N})
    if method == "spectral":
        return variance_spectral(X, R, tol)
    if method == "montecarlo":
        return variance_montecarlo(X, R, samples, rng or RngSpec())
    raise PreconditionError(f"unknown method {method!r}; expected one of {METHODS}")


def replicate_rows(L: Lattice, generator: str, N: int, R: float, replicates: int, seed: int,
                   threads: int = 1, method: str = "realspace", label: float | None = None,
                   stream_base: int = 0, tol: float = 1e-3) -> list[SweepRow]:
    """Variance of ``replicates`` independent draws; replicate r uses stream ``stream_base + r``."""
    if replicates < 1:
        raise PreconditionError("replicates must be >= 1")

    def one(rng: RngSpec) -> VarianceEstimate:
        X = make_points(L, generator, N, rng)
        return estimate(X, R, method, tol, rng=rng.stream(rng.stream_id + STREAM_STRIDE // 2))

    rngs = [RngSpec(seed, stream_base + r) for r in range(replicates)]
    results = replicate_map(one, rngs, threads)
    x = R if label is None else label
    return [SweepRow(generator, L.dim, N, x, r, e.value, e.error_bound) for r, e in enumerate(results)]


def mean_and_se(rows: list[SweepRow]) -> tuple[float, float]:
    v = np.array([r.variance for r in rows])
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def scan(L: Lattice, generator: str, regime: str, replicates: int, seed: int, *, Ns=None, R=None,
         N=None, t_values=None, shrink: float | None = None, threads: int = 1,
         method: str = "realspace", delta: float = 0.05) -> tuple[RegimeReport, list[SweepRow]]:
    """Run a replicate sweep and fit the regime to the replicate means.

    * large: fixed ``R`` over ``Ns``.
    * small: ``R_N = R (N / Ns[0])^{-shrink}``, ``shrink`` defaulting to ``1/(2d)``.
    * threshold: fixed ``N``, ``R = t N^{-1/d}`` over ``t_values``.
    """
    d = L.dim
    points = []
    if regime in ("large", "small"):
        if not Ns or R is None:
            raise PreconditionError(f"the {regime} regime needs Ns and R")
        gamma = 0.5 / d if shrink is None else float(shrink)
        for n in Ns:
            r = R if regime == "large" else R * (n / Ns[0]) ** (-gamma)
            points.append((int(n), r, r))
    elif regime == "threshold":
        if N is None or not t_values:
            raise PreconditionError("the threshold regime needs N and t values")
        points = [(int(N), t * N ** (-1.0 / d), t) for t in t_values]
    else:
        raise PreconditionError(f"unknown regime {regime!r}")
    rows: list[SweepRow] = []
    data, errors = [], []
    for i, (n, r, label) in enumerate(points):
        block = replicate_rows(L, generator, n, r, replicates, seed, threads, method, label,
                               stream_base=i * STREAM_STRIDE)
        rows += block
        mean, se = mean_and_se(block)
        data.append((n, label, mean))
        errors.append(se)
    report = fit_regime(data, regime, dim=d, delta=delta)
    report.extra.update({"generator": generator, "replicates": replicates, "standard_errors": errors,
                         "method": method})
    return report, rows


def write_sweep_csv(rows: list[SweepRow], path, comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f.name for f in fields(SweepRow)])
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in astuple(row)])
