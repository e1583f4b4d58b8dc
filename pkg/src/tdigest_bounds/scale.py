"""Scale functions k0..k3 and the closed-form size and weight bounds they imply.

A scale function maps a quantile ``q`` to an index ``k``.  A centroid whose
samples span ``[q_left, q_right]`` has *k-size* ``k(q_right) - k(q_left)``
and, unless it holds a single sample, that k-size may not exceed one.

All logarithms are natural logarithms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple


class DomainError(ValueError):
    """An argument lies outside the domain of a scale-function operation."""


class ScaleKind(enum.IntEnum):
    K0 = 0
    K1 = 1
    K2 = 2
    K3 = 3


class NormalizerPolicy(enum.IntEnum):
    CONSTANT = 0
    PAPER_K2 = 1  # Z = 4 log(n/delta) + 24
    PAPER_K3 = 2  # Z = 4 log(n/delta) + 21


_PAPER_OFFSET = {NormalizerPolicy.PAPER_K2: 24.0, NormalizerPolicy.PAPER_K3: 21.0}


@dataclass(frozen=True)
class ScaleSpec:
    """Which scale function to use, its compression ``delta`` and normalizer.

    ``z`` is only consulted under :attr:`NormalizerPolicy.CONSTANT`, and only
    by k2 and k3.
    """

    kind: ScaleKind
    delta: float
    policy: NormalizerPolicy = NormalizerPolicy.CONSTANT
    z: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ScaleKind(self.kind))
        object.__setattr__(self, "policy", NormalizerPolicy(self.policy))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "z", float(self.z))
        if not (math.isfinite(self.delta) and self.delta >= 2):
            raise DomainError(f"delta must be finite and >= 2, got {self.delta}")
        if not (math.isfinite(self.z) and self.z > 0):
            raise DomainError(f"normalizer constant must be positive, got {self.z}")
        if self.kind in (ScaleKind.K0, ScaleKind.K1) and self.policy != NormalizerPolicy.CONSTANT:
            raise DomainError(f"{self.kind.name} takes no n-dependent normalizer")

    @classmethod
    def paper(cls, kind: ScaleKind, delta: float) -> ScaleSpec:
        """The normalizer the bounds analysis recommends for ``kind``."""
        kind = ScaleKind(kind)
        policy = {
            ScaleKind.K2: NormalizerPolicy.PAPER_K2,
            ScaleKind.K3: NormalizerPolicy.PAPER_K3,
        }.get(kind, NormalizerPolicy.CONSTANT)
        return cls(kind, delta, policy)

    @property
    def label(self) -> str:
        if self.policy == NormalizerPolicy.CONSTANT:
            norm = f"const:{self.z:g}"
        else:
            norm = self.policy.name.lower()
        return f"{self.kind.name.lower()}/{self.delta:g}/{norm}"


class QuantilePair(NamedTuple):
    q1: float
    q2: float


class CountBounds(NamedTuple):
    lower: float
    upper: float


def normalizer(spec: ScaleSpec, n: float) -> float:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if spec.policy == NormalizerPolicy.CONSTANT:
        return spec.z
    return 4.0 * math.log(max(n / spec.delta, 1.0)) + _PAPER_OFFSET[spec.policy]


def _check_q(q: float) -> None:
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile must lie in [0, 1], got {q}")


def _forward(kind: ScaleKind, delta: float, z: float, q: float) -> float:
    # q already validated; z ignored by k0/k1
    if kind == ScaleKind.K0:
        return 0.5 * delta * q
    if kind == ScaleKind.K1:
        return delta / (2 * math.pi) * math.asin(2 * q - 1)
    if kind == ScaleKind.K2:
        if q == 0.0:
            return -math.inf
        if q == 1.0:
            return math.inf
        return delta / z * (math.log(q) - math.log(1.0 - q))
    if q <= 0.5:
        return -math.inf if q == 0.0 else delta / z * math.log(2 * q)
    return math.inf if q == 1.0 else -delta / z * math.log(2 * (1.0 - q))


def _inverse(kind: ScaleKind, delta: float, z: float, kval: float) -> float:
    # kval already validated / clamped for k0 and k1
    if kind == ScaleKind.K0:
        q = 2.0 * kval / delta
    elif kind == ScaleKind.K1:
        q = 0.5 * (math.sin(2 * math.pi * kval / delta) + 1.0)
    elif kind == ScaleKind.K2:
        t = kval * z / delta
        if t >= 0:
            q = 1.0 / (1.0 + math.exp(-t))
        else:
            e = math.exp(t)
            q = e / (1.0 + e)
    else:
        t = kval * z / delta
        q = 0.5 * math.exp(t) if t <= 0 else 1.0 - 0.5 * math.exp(-t)
    return min(1.0, max(0.0, q))


def k_range(spec: ScaleSpec) -> tuple[float, float]:
    """``(k(0), k(1))``; infinite for k2 and k3."""
    if spec.kind == ScaleKind.K0:
        return 0.0, 0.5 * spec.delta
    if spec.kind == ScaleKind.K1:
        return -0.25 * spec.delta, 0.25 * spec.delta
    return -math.inf, math.inf


def evaluate(spec: ScaleSpec, q: float, n: float) -> float:
    """k(q), with the normalizer evaluated at ``n`` samples."""
    _check_q(q)
    return _forward(spec.kind, spec.delta, normalizer(spec, n), q)


def invert(spec: ScaleSpec, kval: float, n: float) -> float:
    """The quantile ``q`` with ``k(q) == kval``."""
    if math.isnan(kval):
        raise DomainError("k value is NaN")
    lo, hi = k_range(spec)
    if not lo <= kval <= hi:
        # tolerate rounding on the finite ranges of k0/k1
        slack = 1e-12 * spec.delta
        if lo - slack <= kval <= hi + slack:
            kval = min(hi, max(lo, kval))
        else:
            raise DomainError(f"k value {kval} outside [{lo}, {hi}]")
    return _inverse(spec.kind, spec.delta, normalizer(spec, n), kval)


def slope(spec: ScaleSpec, q: float, n: float) -> float:
    """dk/dq at ``q``."""
    _check_q(q)
    delta = spec.delta
    if spec.kind == ScaleKind.K0:
        return 0.5 * delta
    z = normalizer(spec, n)
    if spec.kind == ScaleKind.K1:
        s = q * (1.0 - q)
        return math.inf if s == 0 else delta / (2 * math.pi * math.sqrt(s))
    if spec.kind == ScaleKind.K2:
        s = q * (1.0 - q)
        return math.inf if s == 0 else delta / z / s
    s = min(q, 1.0 - q)
    return math.inf if s == 0 else delta / (z * s)


def _lower_root(c: float) -> float:
    # smaller root of q^2 - q + c = 0, written to avoid cancellation
    return 2 * c / (1.0 + math.sqrt(1.0 - 4 * c))


def unit_weight_cutoffs(spec: ScaleSpec, n: float) -> QuantilePair:
    """Where the slope of k crosses ``n``.

    Outside ``[q1, q2]`` one sample already spans more than one unit of k, so
    centroids there hold a single sample.  ``(1/2, 1/2)`` means every centroid
    is forced to unit weight.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    delta = spec.delta
    half = QuantilePair(0.5, 0.5)
    if spec.kind == ScaleKind.K0:
        return half if n <= delta / 2 else QuantilePair(0.0, 1.0)
    if spec.kind == ScaleKind.K1:
        if n <= delta / math.pi:
            return half
        c = delta / (2 * math.pi * n)
        q1 = _lower_root(c * c)
        return QuantilePair(q1, 1.0 - q1)
    ratio = delta / normalizer(spec, n)
    if spec.kind == ScaleKind.K2:
        if n <= 4 * ratio:
            return half
        q1 = _lower_root(ratio / n)
        return QuantilePair(q1, 1.0 - q1)
    # k3 is least steep at q = 1/2, where its slope is 2 delta / Z
    if n <= 2 * ratio:
        return half
    q1 = ratio / n
    return QuantilePair(q1, 1.0 - q1)


def centroid_count_bounds(spec: ScaleSpec, n: float) -> CountBounds:
    """Range the number of centroids of a compressed digest should fall in.

    For k2 and k3 the upper end is the closed-form bound and the lower end is
    the k-range between the unit-weight cutoffs: every centroid covers at most
    one unit of k there.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    delta = spec.delta
    if spec.kind in (ScaleKind.K0, ScaleKind.K1):
        if spec.kind == ScaleKind.K1 and n <= delta / math.pi:
            return CountBounds(float(n), float(n))
        return CountBounds(min(n, delta / 2), min(n, delta))

    q1, q2 = unit_weight_cutoffs(spec, n)
    if q1 == q2:
        return CountBounds(float(n), float(n))
    z = normalizer(spec, n)
    log_term = math.log(n / delta) + math.log(z)
    if spec.kind == ScaleKind.K2:
        upper = 4 * delta / z * (log_term + 0.5)
    else:
        upper = 4 * delta / z * (0.5 - math.log(2) + log_term)
    upper = min(float(n), upper)
    lower = _forward(spec.kind, delta, z, q2) - _forward(spec.kind, delta, z, q1)
    lower = min(float(n), lower, upper)
    return CountBounds(max(0.0, lower), upper)


def max_weight_bound(spec: ScaleSpec, n: float, q_worst: float) -> float:
    """Largest weight a centroid touching ``q_worst`` should carry.

    Never below one: a lone sample is always admissible.
    """
    _check_q(q_worst)
    q = q_worst
    delta = spec.delta
    if spec.kind == ScaleKind.K0:
        w = 2 * n / delta
    elif spec.kind == ScaleKind.K1:
        w = 2 * n * math.sin(math.pi / delta) * math.sqrt(q * (1.0 - q))
    elif spec.kind == ScaleKind.K2:
        w = n * normalizer(spec, n) / delta * q * (1.0 - q)
    else:
        w = n * normalizer(spec, n) / delta * min(q, 1.0 - q)
    return max(1.0, w)


def k1_delta_q(spec: ScaleSpec, q: float) -> float:
    """Quantile width of a k1 centroid spanning one unit of k centred on ``q``."""
    if spec.kind != ScaleKind.K1:
        raise DomainError("k1_delta_q is only defined for k1")
    _check_q(q)
    return 2 * math.sin(math.pi / spec.delta) * math.sqrt(q * (1.0 - q))
