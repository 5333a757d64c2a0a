"""Degeneracy and diversity measures for weighted particle sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidCount, InvalidWeights
from .resampling import get_resampler, normalize
from .rng import Rng

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step summary of the pre-resampling weights."""

    t: int
    ess: float
    weight_variance: float
    unique_ancestors: int
    resampled: bool = False
    mean_estimate: float = float("nan")


def _as_normalized(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise InvalidWeights("weights must be a non-empty 1-d array")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise InvalidWeights("weights must be finite and non-negative")
    if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
        raise InvalidWeights(f"weights must sum to one (got {w.sum()!r})")
    return w


def ess_estimate(w) -> float:
    """Effective sample size ``1 / sum(w_i**2)`` of normalised weights.

    Evaluated as ``(sum v)**2 / sum(v**2)`` with ``v = w / max(w)``, which is
    the same quantity but returns exactly ``N`` for uniform weights and
    exactly 1 for a one-hot vector.
    """
    w = _as_normalized(w)
    v = w / w.max()
    ess = v.sum() ** 2 / np.dot(v, v)
    return float(min(max(ess, 1.0), w.size))


def weight_variance(w) -> float:
    """Population variance of the weight values (divides by ``N``)."""
    return float(np.var(np.asarray(w, dtype=np.float64)))


def unique_ancestors(tags) -> int:
    return int(np.unique(np.asarray(tags)).size)


def count_bias_probe(scheme, w, n: int, replicates: int, seed: int) -> np.ndarray:
    """Mean offspring count minus ``n * w_i`` over seeded replicates.

    ``scheme`` is a resampler callable or a registered scheme name. All
    replicates share one generator seeded with ``seed``.
    """
    if replicates < 1000:
        raise InvalidCount("count_bias_probe needs at least 1000 replicates")
    resample = get_resampler(scheme) if isinstance(scheme, str) else scheme
    w = normalize(w)
    rng = Rng(seed)
    total = np.zeros(w.size, dtype=np.int64)
    for _ in range(replicates):
        total += np.bincount(resample(w, n, rng), minlength=w.size)
    return total / replicates - n * w
