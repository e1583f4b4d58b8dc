"""Checks the closed-form count and weight bounds against real digests."""

from __future__ import annotations

import csv
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .datagen import DISTRIBUTIONS, generate
from .digest import TDigest
from .scale import (
    CountBounds,
    DomainError,
    ScaleKind,
    ScaleSpec,
    centroid_count_bounds,
    max_weight_bound,
)

KSIZE_TOL = 1e-9
# the k2/k3 count bound chains several approximations
COUNT_SLACK = {ScaleKind.K0: 0, ScaleKind.K1: 0, ScaleKind.K2: 2, ScaleKind.K3: 2}

TAIL_LOW, TAIL_HIGH = 0.001, 0.999


class PreconditionError(ValueError):
    pass


class WeightViolation(NamedTuple):
    index: int
    weight: float
    bound: float
    q_worst: float


class KSizeViolation(NamedTuple):
    index: int
    k_size: float


def q_worst(w_left: float, w: float, n: float) -> float:
    """End of the centroid's estimated quantile span farther from 1/2."""
    if w_left < 0 or w <= 0 or n <= 0:
        raise DomainError("weights must be positive")
    if w_left + w > n:
        raise DomainError(f"w_left + w = {w_left + w} exceeds n = {n}")
    q_min = w_left / n
    q_max = (w_left + w) / n
    return q_min if abs(q_min - 0.5) > abs(q_max - 0.5) else q_max


@dataclass
class BoundReport:
    spec: ScaleSpec
    n: int
    centroid_count: int
    count_bounds: CountBounds
    count_ok: bool
    max_weight_violations: list[WeightViolation] = field(default_factory=list)
    ksize_violations: list[KSizeViolation] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return self.count_ok and not self.max_weight_violations and not self.ksize_violations

    def to_dict(self) -> dict:
        return {
            "scale": self.spec.kind.name.lower(),
            "delta": self.spec.delta,
            "normalizer": _norm_label(self.spec),
            "n": self.n,
            "centroid_count": self.centroid_count,
            "count_bounds": {"lower": self.count_bounds.lower, "upper": self.count_bounds.upper},
            "count_slack": COUNT_SLACK[self.spec.kind],
            "count_ok": self.count_ok,
            "max_weight_violations": [v._asdict() for v in self.max_weight_violations],
            "ksize_violations": [v._asdict() for v in self.ksize_violations],
            "all_ok": self.all_ok,
        }


def _norm_label(spec: ScaleSpec) -> str:
    return spec.label.split("/", 2)[2]


def verify_digest(d: TDigest) -> BoundReport:
    """Compare a compressed digest with the count, weight and k-size bounds.

    Weight-bound breaches are reported, not raised: the weight bounds rest on
    estimated quantile spans and are heuristic.
    """
    if d.buffered:
        raise PreconditionError("digest has buffered samples; call compress() first")
    n = d.total_weight
    count = len(d)
    if n == 0:
        return BoundReport(d.spec, 0, 0, CountBounds(0.0, 0.0), count == 0)
    bounds = centroid_count_bounds(d.spec, n)
    slack = COUNT_SLACK[d.spec.kind]
    count_ok = bounds.lower - 1e-9 <= count <= bounds.upper + slack + 1e-9

    weights = d.weights
    left = np.concatenate([[0.0], np.cumsum(weights)[:-1]])
    heavy = []
    ksize = []
    for i in np.flatnonzero(weights > 1).tolist():
        w = float(weights[i])
        qw = q_worst(float(left[i]), w, n)
        bound = max_weight_bound(d.spec, n, qw)
        if w > bound * (1 + 1e-12):
            heavy.append(WeightViolation(i, w, bound, qw))
        ks = d.k_size(i)
        if ks > 1 + KSIZE_TOL:
            ksize.append(KSizeViolation(i, ks))
    return BoundReport(d.spec, n, count, bounds, count_ok, heavy, ksize)


@dataclass
class SweepRow:
    scale: str
    delta: float
    normalizer: str
    n: int
    dist: str
    seed: int
    centroids: int
    count_lower: float
    count_upper: float
    count_ok: bool
    max_weight: float
    weight_violations: int
    ksize_violations: int
    elapsed_ms: float

    def key(self):
        return (self.scale, self.delta, self.normalizer, self.n,
                DISTRIBUTIONS.index(self.dist), self.seed)


CSV_COLUMNS = [f.name for f in fields(SweepRow)]


def _trial(spec: ScaleSpec, n: int, dist: str, seed: int, buffer: int | None) -> SweepRow:
    data = generate(dist, n, seed)
    t0 = time.perf_counter()
    d = TDigest(spec, buffer)
    d.insert_many(data)
    d.compress()
    report = verify_digest(d)
    elapsed = (time.perf_counter() - t0) * 1e3
    return SweepRow(
        scale=spec.kind.name.lower(),
        delta=spec.delta,
        normalizer=_norm_label(spec),
        n=n,
        dist=dist,
        seed=seed,
        centroids=report.centroid_count,
        count_lower=report.count_bounds.lower,
        count_upper=report.count_bounds.upper,
        count_ok=report.count_ok,
        max_weight=float(d.weights.max()) if len(d) else 0.0,
        weight_violations=len(report.max_weight_violations),
        ksize_violations=len(report.ksize_violations),
        elapsed_ms=elapsed,
    )


def run_trials(trials: Iterable[tuple[ScaleSpec, int]], dists: Sequence[str],
               seeds: Sequence[int], workers: int = 1,
               buffer: int | None = None) -> list[SweepRow]:
    """One row per (spec, n) trial x distribution x seed, sorted by parameters."""
    trials = list(trials)
    dists = list(dists)
    seeds = list(seeds)
    if not trials or not dists or not seeds:
        raise ValueError("sweep needs at least one scale, n, distribution and seed")
    for dist in dists:
        if dist not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {dist!r}")
    jobs = [(spec, int(n), dist, int(seed), buffer)
            for (spec, n), dist, seed in itertools.product(trials, dists, seeds)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_trial, *zip(*jobs)))
    else:
        rows = [_trial(*job) for job in jobs]
    return sorted(rows, key=SweepRow.key)


def sweep(scales: Iterable[ScaleSpec], ns: Iterable[int], dists: Iterable[str],
          seeds: Iterable[int], workers: int = 1, buffer: int | None = None) -> list[SweepRow]:
    scales = list(scales)
    ns = list(ns)
    if not scales or not ns:
        raise ValueError("sweep needs at least one scale, n, distribution and seed")
    return run_trials(itertools.product(scales, ns), list(dists), list(seeds), workers, buffer)


def default_trials() -> list[tuple[ScaleSpec, int]]:
    """The acceptance grid.

    k0 and k1 at delta=100, n=1e5; k2 and k3 with their growing normalizers
    at delta in {50, 100} and n/delta in {1e1, 1e2, 1e3, 1e4}.
    """
    trials = [(ScaleSpec(kind, 100), 100_000) for kind in (ScaleKind.K0, ScaleKind.K1)]
    for kind in (ScaleKind.K2, ScaleKind.K3):
        for delta in (50, 100):
            for ratio in (10, 100, 1_000, 10_000):
                trials.append((ScaleSpec.paper(kind, delta), ratio * delta))
    return trials


DEFAULT_SEEDS = (0, 1, 2)


def write_csv(rows: Iterable[SweepRow], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(asdict(row))


@dataclass
class AccuracyReport:
    q_grid: list[float]
    rank_errors: list[float]
    max_tail_error: float
    max_mid_error: float


def exact_quantile(data: np.ndarray, q: float) -> float:
    """Order statistic ``data[ceil(q n) - 1]`` (clamped) of sorted ``data``."""
    n = len(data)
    idx = min(n - 1, max(0, math.ceil(q * n) - 1))
    return float(data[idx])


def oracle_compare(d: TDigest, data: Sequence[float], q_grid: Sequence[float]) -> AccuracyReport:
    """Rank error of ``d`` at the exact quantiles of the sorted samples ``data``.

    Tail points are those with q <= 0.001 or q >= 0.999; a region with no
    grid points reports NaN.
    """
    data = np.asarray(data, dtype=float)
    if len(data) != d.total_weight:
        raise ValueError(f"data has {len(data)} samples, digest holds {d.total_weight}")
    if len(data) and np.any(np.diff(data) < 0):
        raise ValueError("data must be sorted")
    grid = [float(q) for q in q_grid]
    errors = [abs(d.cdf(exact_quantile(data, q)) - q) for q in grid]
    tail = [e for q, e in zip(grid, errors) if q <= TAIL_LOW or q >= TAIL_HIGH]
    mid = [e for q, e in zip(grid, errors) if TAIL_LOW < q < TAIL_HIGH]
    return AccuracyReport(
        q_grid=grid,
        rank_errors=errors,
        max_tail_error=max(tail) if tail else math.nan,
        max_mid_error=max(mid) if mid else math.nan,
    )
