"""Deterministic sample generators used by the sweep and the CLI."""

from __future__ import annotations

import numpy as np

DISTRIBUTIONS = ("uniform", "normal", "sequential", "reversed", "clustered")


def generate(dist: str, n: int, seed: int = 0) -> np.ndarray:
    """``n`` samples from distribution ``dist``; identical for identical arguments.

    ``uniform`` stays strictly inside (0, 1).  ``clustered`` puts half the
    samples near 0 and half near 1, shuffled, with +-1e-9 jitter.
    """
    if dist not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {dist!r}; choose from {', '.join(DISTRIBUTIONS)}")
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    if dist == "uniform":
        return (rng.integers(0, 2**53, size=n) + 0.5) / 2.0**53
    if dist == "normal":
        return rng.standard_normal(n)
    if dist == "sequential":
        return np.arange(1, n + 1, dtype=float)
    if dist == "reversed":
        return np.arange(n, 0, -1, dtype=float)
    labels = np.zeros(n)
    labels[n // 2:] = 1.0
    labels = rng.permutation(labels)
    return labels + rng.uniform(-1e-9, 1e-9, size=n)
