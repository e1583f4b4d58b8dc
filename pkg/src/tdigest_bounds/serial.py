"""Little-endian binary encoding of a compressed digest.

Layout::

    b"TDIG"  u16 version  u8 kind  u8 policy  [f64 z if policy == CONSTANT]
    f64 delta  u64 total_weight  f64 min  f64 max  u32 count
    count * (f64 mean, f64 weight)
"""

from __future__ import annotations

import math
import struct

import numpy as np

from .digest import TDigest
from .scale import NormalizerPolicy, ScaleKind, ScaleSpec

MAGIC = b"TDIG"
VERSION = 1

_HEAD = struct.Struct("<4sHBB")
_Z = struct.Struct("<d")
_BODY = struct.Struct("<dQddI")


class DigestFormatError(ValueError):
    pass


class BadMagicError(DigestFormatError):
    pass


class UnsupportedVersionError(DigestFormatError):
    pass


class TruncatedError(DigestFormatError):
    pass


class InvariantViolationError(DigestFormatError):
    pass


def dumps(d: TDigest) -> bytes:
    d.compress()
    spec = d.spec
    out = [_HEAD.pack(MAGIC, VERSION, int(spec.kind), int(spec.policy))]
    if spec.policy == NormalizerPolicy.CONSTANT:
        out.append(_Z.pack(spec.z))
    out.append(_BODY.pack(spec.delta, d.total_weight, d.min, d.max, len(d)))
    pairs = np.empty((len(d), 2), dtype="<f8")
    pairs[:, 0] = d._means
    pairs[:, 1] = d._weights
    out.append(pairs.tobytes())
    return b"".join(out)


def _take(data: bytes, pos: int, st: struct.Struct):
    if len(data) < pos + st.size:
        raise TruncatedError(f"need {st.size} bytes at offset {pos}, have {len(data) - pos}")
    return st.unpack_from(data, pos), pos + st.size


def loads(data: bytes) -> TDigest:
    data = bytes(data)
    if len(data) < 4:
        raise TruncatedError("shorter than the magic number")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    if len(data) < _HEAD.size:
        raise TruncatedError("truncated header")
    (_, version, kind, policy), pos = _take(data, 0, _HEAD)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    try:
        kind = ScaleKind(kind)
        policy = NormalizerPolicy(policy)
    except ValueError as e:
        raise InvariantViolationError(str(e)) from None
    z = 1.0
    if policy == NormalizerPolicy.CONSTANT:
        (z,), pos = _take(data, pos, _Z)
    (delta, n, lo, hi, count), pos = _take(data, pos, _BODY)
    size = 16 * count
    if len(data) < pos + size:
        raise TruncatedError(f"expected {count} centroids, got {(len(data) - pos) // 16}")
    if len(data) > pos + size:
        raise DigestFormatError(f"{len(data) - pos - size} trailing bytes")
    try:
        spec = ScaleSpec(kind, delta, policy, z)
    except ValueError as e:
        raise InvariantViolationError(str(e)) from None

    pairs = np.frombuffer(data, dtype="<f8", count=2 * count, offset=pos).reshape(count, 2)
    means = pairs[:, 0].astype(float)
    weights = pairs[:, 1].astype(float)
    if not np.all(np.isfinite(means)):
        raise InvariantViolationError("non-finite centroid mean")
    if not np.all((weights >= 1) & (weights == np.floor(weights)) & np.isfinite(weights)):
        raise InvariantViolationError("centroid weight must be a positive whole number")
    if count and np.any(np.diff(means) < 0):
        raise InvariantViolationError("centroid means out of order")
    if float(weights.sum()) != float(n):
        raise InvariantViolationError(f"weights sum to {weights.sum()}, header says {n}")
    if count:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= means[0] and means[-1] <= hi):
            raise InvariantViolationError("min/max inconsistent with centroids")

    d = TDigest(spec)
    d._load(means, weights, n, lo, hi)
    return d
