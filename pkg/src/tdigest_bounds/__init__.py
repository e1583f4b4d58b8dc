"""t-digest with the k0..k3 scale functions and checks of their size bounds."""

from .digest import Centroid, EmptyDigestError, TDigest, merge_digests
from .scale import (
    CountBounds,
    DomainError,
    NormalizerPolicy,
    QuantilePair,
    ScaleKind,
    ScaleSpec,
    centroid_count_bounds,
    evaluate,
    invert,
    k1_delta_q,
    max_weight_bound,
    normalizer,
    slope,
    unit_weight_cutoffs,
)

__all__ = [
    "Centroid", "CountBounds", "DomainError", "EmptyDigestError", "NormalizerPolicy",
    "QuantilePair", "ScaleKind", "ScaleSpec", "TDigest", "centroid_count_bounds",
    "evaluate", "invert", "k1_delta_q", "max_weight_bound", "merge_digests",
    "normalizer", "slope", "unit_weight_cutoffs",
]
