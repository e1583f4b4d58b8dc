"""Merging t-digest driven by one of the four scale functions.

Samples are buffered and folded into the centroid list by a single greedy
pass over the sorted union of centroids and buffer.  A group of points is
allowed to grow only while its k-size stays within one unit.
"""

from __future__ import annotations

import bisect
import math
from typing import Iterable, NamedTuple

import numpy as np

from .scale import DomainError, ScaleSpec, _forward, _inverse, k_range, normalizer


class Centroid(NamedTuple):
    mean: float
    weight: float


class EmptyDigestError(ValueError):
    pass


def _check_weight(w) -> float:
    w = float(w)
    if not (math.isfinite(w) and w >= 1 and w == math.floor(w)):
        raise DomainError(f"weight must be a positive whole number, got {w}")
    return w


class TDigest:
    """Streaming quantile sketch.

    ``buffer_capacity`` defaults to ``10 * delta``.  Inserting is cheap until
    the buffer fills; then :meth:`compress` folds it into the centroids.
    """

    def __init__(self, spec: ScaleSpec, buffer_capacity: int | None = None):
        if buffer_capacity is None:
            buffer_capacity = max(1, int(math.ceil(10 * spec.delta)))
        if buffer_capacity < 1:
            raise DomainError("buffer capacity must be >= 1")
        self.spec = spec
        self.buffer_capacity = int(buffer_capacity)
        self._means = np.empty(0)
        self._weights = np.empty(0)
        self._buf_x: list[float] = []
        self._buf_w: list[float] = []
        self._n = 0
        self._min = math.inf
        self._max = -math.inf
        self._reverse = False

    def __repr__(self):
        return (f"TDigest({self.spec.label}, n={self._n}, "
                f"centroids={len(self._means)}, buffered={len(self._buf_x)})")

    @property
    def total_weight(self) -> int:
        return self._n

    @property
    def min(self) -> float:
        return self._min

    @property
    def max(self) -> float:
        return self._max

    @property
    def buffered(self) -> int:
        return len(self._buf_x)

    @property
    def means(self) -> np.ndarray:
        return self._means.copy()

    @property
    def weights(self) -> np.ndarray:
        return self._weights.copy()

    @property
    def centroids(self) -> list[Centroid]:
        return [Centroid(m, w) for m, w in zip(self._means.tolist(), self._weights.tolist())]

    def __len__(self):
        return len(self._means)

    def insert(self, x: float, w: float = 1) -> None:
        x = float(x)
        if not math.isfinite(x):
            raise DomainError(f"sample must be finite, got {x}")
        w = _check_weight(w)
        self._buf_x.append(x)
        self._buf_w.append(w)
        self._n += int(w)
        if x < self._min:
            self._min = x
        if x > self._max:
            self._max = x
        if len(self._buf_x) >= self.buffer_capacity:
            self.compress()

    def insert_many(self, values: Iterable[float]) -> None:
        """Insert unit-weight samples; same result as calling :meth:`insert` on each."""
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            return
        if not np.all(np.isfinite(arr)):
            raise DomainError("samples must be finite")
        pos = 0
        while pos < arr.size:
            take = min(self.buffer_capacity - len(self._buf_x), arr.size - pos)
            chunk = arr[pos:pos + take]
            self._buf_x.extend(chunk.tolist())
            self._buf_w.extend([1.0] * take)
            self._n += take
            self._min = min(self._min, float(chunk.min()))
            self._max = max(self._max, float(chunk.max()))
            pos += take
            if len(self._buf_x) >= self.buffer_capacity:
                self.compress()

    def compress(self) -> None:
        """Fold the buffer into the centroids.  A no-op when the buffer is empty."""
        if not self._buf_x:
            return
        x = np.concatenate([self._means, np.asarray(self._buf_x)])
        w = np.concatenate([self._weights, np.asarray(self._buf_w)])
        self._buf_x = []
        self._buf_w = []
        self._means, self._weights = _merge_points(self.spec, x, w, self._n, self._reverse)
        self._reverse = not self._reverse

    def k_size(self, index: int) -> float:
        """k(q_right) - k(q_left) with q estimated from the weight to the left."""
        self.compress()
        if not 0 <= index < len(self._means):
            raise IndexError(f"centroid index {index} out of range")
        n = float(self._n)
        left = float(self._weights[:index].sum())
        z = normalizer(self.spec, n)
        kind, delta = self.spec.kind, self.spec.delta
        q_lo = left / n
        q_hi = min(1.0, (left + float(self._weights[index])) / n)
        return _forward(kind, delta, z, q_hi) - _forward(kind, delta, z, q_lo)

    def k_sizes(self) -> np.ndarray:
        self.compress()
        return np.array([self.k_size(i) for i in range(len(self._means))])

    def _knots(self):
        if self._n == 0:
            raise EmptyDigestError("empty digest")
        self.compress()
        w = self._weights
        left = np.concatenate([[0.0], np.cumsum(w)[:-1]])
        ranks = np.concatenate([[0.0], left + w / 2, [float(self._n)]])
        values = np.concatenate([[self._min], self._means, [self._max]])
        return ranks, values

    def quantile(self, q: float) -> float:
        """Value at quantile ``q``, interpolating between centroid midpoints."""
        if not 0.0 <= q <= 1.0:
            raise DomainError(f"quantile must lie in [0, 1], got {q}")
        ranks, values = self._knots()
        if q == 0.0:
            return self._min
        if q == 1.0:
            return self._max
        v = float(np.interp(q * self._n, ranks, values))
        return min(self._max, max(self._min, v))

    def cdf(self, x: float) -> float:
        """Fraction of the samples at or below ``x``; inverse of :meth:`quantile`."""
        ranks, values = self._knots()
        x = float(x)
        if math.isnan(x):
            raise DomainError("x is NaN")
        if x < self._min:
            return 0.0
        if x > self._max:
            return 1.0
        lo = int(np.searchsorted(values, x, side="left"))
        hi = int(np.searchsorted(values, x, side="right"))
        if lo < hi:
            # x sits on one or more knots; report the middle of their rank span
            rank = 0.5 * (ranks[lo] + ranks[hi - 1])
        else:
            x0, x1 = values[lo - 1], values[lo]
            r0, r1 = ranks[lo - 1], ranks[lo]
            rank = r0 + (r1 - r0) * (x - x0) / (x1 - x0)
        return min(1.0, max(0.0, float(rank) / self._n))

    def to_bytes(self) -> bytes:
        from .serial import dumps

        return dumps(self)

    @classmethod
    def from_bytes(cls, data: bytes) -> TDigest:
        from .serial import loads

        return loads(data)

    def _load(self, means, weights, n, lo, hi) -> None:
        self._means = np.asarray(means, dtype=float)
        self._weights = np.asarray(weights, dtype=float)
        self._n = int(n)
        self._min = lo
        self._max = hi


def merge_digests(a: TDigest, b: TDigest) -> TDigest:
    """A new digest summarising the samples of both ``a`` and ``b``."""
    if a.spec != b.spec:
        raise DomainError(f"cannot merge {a.spec.label} with {b.spec.label}")
    out = TDigest(a.spec, a.buffer_capacity)
    x = np.concatenate([a._means, np.asarray(a._buf_x), b._means, np.asarray(b._buf_x)])
    w = np.concatenate([a._weights, np.asarray(a._buf_w), b._weights, np.asarray(b._buf_w)])
    n = a._n + b._n
    if n:
        order = np.argsort(x, kind="stable")
        means, weights = _merge_points(a.spec, x[order], w[order], n, False, presorted=True)
        out._load(means, weights, n, min(a._min, b._min), max(a._max, b._max))
    return out


def _merge_points(spec: ScaleSpec, x, w, n, reverse, presorted=False):
    """One greedy pass; returns sorted (means, weights)."""
    if not presorted:
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
    nf = float(n)
    kind, delta = spec.kind, spec.delta
    z = normalizer(spec, nf)
    k_lo, k_hi = k_range(spec)

    def k(q):
        return _forward(kind, delta, z, q)

    if not reverse:
        def capacity(done):
            target = k(done / nf) + 1.0
            if target >= k_hi:
                return nf - done
            return nf * _inverse(kind, delta, z, target) - done

        def fits(done, upto):
            return k(upto / nf) - k(done / nf) <= 1.0
    else:
        x, w = x[::-1], w[::-1]

        def capacity(done):
            top = nf - done
            target = k(top / nf) - 1.0
            if target <= k_lo:
                return top
            return top - nf * _inverse(kind, delta, z, target)

        def fits(done, upto):
            return k((nf - done) / nf) - k((nf - upto) / nf) <= 1.0

    means, weights = _greedy(x, w, capacity, fits)
    if reverse:
        means, weights = means[::-1].copy(), weights[::-1].copy()
    return means, weights


def _greedy(x, w, capacity, fits):
    """Group consecutive points while the group's k-size stays within one.

    ``capacity(done)`` estimates the admissible weight from the inverse scale
    function; ``fits(done, upto)`` is the exact k-size test and has the last
    word.  A point whose own weight does not fit is split into chunks with
    the same mean, so every multi-sample centroid respects the limit.
    """
    cw = np.cumsum(w)
    cum = cw.tolist()
    m = len(cum)
    starts, ends = [], []
    split = False
    done = 0.0
    i = 0
    while i < m:
        cap = capacity(done)
        j = max(i, bisect.bisect_right(cum, done + cap, i) - 1)
        while j + 1 < m and fits(done, cum[j + 1]):
            j += 1
        while j > i and not fits(done, cum[j]):
            j -= 1
        rest = cum[i] - done
        if j == i and rest > 1 and not fits(done, cum[i]):
            chunk = min(rest - 1, max(1.0, math.floor(cap)))
            while chunk > 1 and not fits(done, done + chunk):
                chunk -= 1
            starts.append(i)
            ends.append(-chunk)  # marker: partial chunk of point i
            split = True
            done += chunk
            continue
        starts.append(i)
        ends.append(j)
        done = cum[j]
        i = j + 1

    if not split:
        s = np.asarray(starts)
        e = np.asarray(ends)
        wx = w * x
        weights = np.diff(np.concatenate([[0.0], cw[e]]))
        means = np.add.reduceat(wx, s) / weights
    else:
        means, weights = _split_groups(x, w, cum, starts, ends)
        s = np.asarray(starts)
        e = np.asarray([st if en < 0 else en for st, en in zip(starts, ends)])
    lo = np.minimum(x[s], x[e])
    hi = np.maximum(x[s], x[e])
    return np.clip(means, lo, hi), weights


def _split_groups(x, w, cum, starts, ends):
    means, weights = [], []
    done = 0.0
    for i, j in zip(starts, ends):
        if j < 0:
            means.append(x[i])
            weights.append(-j)
            done += -j
            continue
        first = cum[i] - done
        total = cum[j] - done
        s = first * x[i] + float(np.dot(w[i + 1:j + 1], x[i + 1:j + 1]))
        means.append(s / total)
        weights.append(total)
        done = cum[j]
    return np.asarray(means, dtype=float), np.asarray(weights, dtype=float)
