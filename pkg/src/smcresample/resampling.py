"""Resampling schemes mapping a weight vector to ancestor indices.

Every scheme has the signature ``scheme(weights, n, rng) -> tags`` where
``weights`` are non-negative (normalised internally), ``n`` is the number of
offspring (defaults to ``len(weights)``) and ``tags`` is an ``int64`` array of
length ``n`` holding 0-based indices into ``weights``.

The heavy lifting happens in compiled kernels that pull uniforms straight
from the counter-based stream of :class:`~smcresample.rng.Rng`; the Python
wrappers validate, normalise, call the kernel once and advance the generator
by the number of draws consumed.

Multinomial, residual and RDD draws all locate a uniform in a cumulative
weight table with the same forward scan (first ``j`` with ``cdf[j] >= u``),
so their costs are directly comparable.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from numba import njit

from .errors import InvalidCount, InvalidWeights
from .rng import Rng, uniform_at

__all__ = [
    "normalize",
    "multinomial_resample",
    "residual_resample",
    "stratified_resample",
    "systematic_resample",
    "rdd_median_resample",
    "RESAMPLERS",
    "SCHEMES",
    "get_resampler",
    "counts",
]


@njit(cache=True)
def _normalize_kernel(w):
    # status: 0 ok, 1 non-finite, 2 negative, 3 no positive mass
    total = 0.0
    for x in w:
        if not np.isfinite(x):
            return w, 1
        if x < 0.0:
            return w, 2
        total += x
    if not total > 0.0:
        return w, 3
    return w / total, 0


_NORMALIZE_ERRORS = {
    1: "weights must be finite",
    2: "weights must be non-negative",
    3: "at least one weight must be positive",
}


def normalize(raw) -> np.ndarray:
    """Scale non-negative weights so they sum to one.

    >>> normalize([2, 2, 4]).tolist()
    [0.25, 0.25, 0.5]
    """
    w = np.asarray(raw, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise InvalidWeights("weights must be a non-empty 1-d array")
    out, status = _normalize_kernel(w)
    if status:
        raise InvalidWeights(_NORMALIZE_ERRORS[status])
    return out


def _check_count(n, m: int) -> int:
    if n is None:
        return m
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidCount(f"number of offspring must be a positive integer, got {n!r}")
    return int(n)


def counts(tags, m: int) -> np.ndarray:
    """Offspring count per index, length ``m``."""
    return np.bincount(np.asarray(tags), minlength=m)


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _scan(cdf, size, u):
    # first j with cdf[j] >= u; u never exceeds cdf[size - 1]
    j = 0
    while j < size - 1 and cdf[j] < u:
        j += 1
    return j


@njit(cache=True)
def _multinomial_kernel(w, n, key, ctr):
    m = w.shape[0]
    cdf = np.cumsum(w)
    total = cdf[m - 1]
    tags = np.empty(n, dtype=np.int64)
    for i in range(n):
        u = uniform_at(key, ctr + np.uint64(i)) * total
        tags[i] = _scan(cdf, m, u)
    return tags


@njit(cache=True)
def _residual_kernel(w, n, key, ctr):
    m = w.shape[0]
    tags = np.empty(n, dtype=np.int64)
    resid = np.empty(m)
    i = 0
    for j in range(m):
        scaled = n * w[j]
        c = int(np.floor(scaled))
        resid[j] = scaled - c
        for _ in range(c):
            if i < n:
                tags[i] = j
                i += 1
    k = n - i
    if k == 0:
        return tags, 0
    cdf = np.cumsum(resid)
    if not cdf[m - 1] > 0.0:
        cdf = np.cumsum(w)
    total = cdf[m - 1]
    for r in range(k):
        u = uniform_at(key, ctr + np.uint64(r)) * total
        tags[i] = _scan(cdf, m, u)
        i += 1
    return tags, k


@njit(cache=True)
def _sweep(cdf, positions):
    # positions non-decreasing and bounded by cdf[-1]
    m = cdf.shape[0]
    n = positions.shape[0]
    tags = np.empty(n, dtype=np.int64)
    j = 0
    for i in range(n):
        while j < m - 1 and cdf[j] < positions[i]:
            j += 1
        tags[i] = j
    return tags


@njit(cache=True)
def _stratified_kernel(w, n, key, ctr):
    cdf = np.cumsum(w)
    total = cdf[cdf.shape[0] - 1]
    pos = np.empty(n)
    for i in range(n):
        pos[i] = min((i + uniform_at(key, ctr + np.uint64(i))) / n * total, total)
    return _sweep(cdf, pos)


@njit(cache=True)
def _systematic_from_offset(w, n, u0):
    cdf = np.cumsum(w)
    total = cdf[cdf.shape[0] - 1]
    pos = np.empty(n)
    for i in range(n):
        pos[i] = min((i + u0) / n * total, total)
    return _sweep(cdf, pos)


@njit(cache=True)
def _systematic_kernel(w, n, key, ctr):
    return _systematic_from_offset(w, n, uniform_at(key, ctr))


@njit(cache=True)
def _kth_smallest(w, k):
    """k-th smallest value (0-based) of ``w``.

    Three-way selection with branch-free compaction into a scratch buffer;
    values equal to the pivot are only counted.
    """
    m = w.shape[0]
    a = w.copy()
    b = np.empty(m + 1)
    size = m
    while True:
        x0 = a[0]
        x1 = a[size // 2]
        x2 = a[size - 1]
        pivot = max(min(x0, x1), min(max(x0, x1), x2))
        nl = 0
        for s in range(size):
            x = a[s]
            b[nl] = x
            nl += x < pivot
        if k < nl:
            a, b = b, a
            size = nl
            continue
        ng = 0
        for s in range(size):
            x = a[s]
            b[ng] = x
            ng += x > pivot
        neq = size - nl - ng
        if k < nl + neq:
            return pivot
        k -= nl + neq
        a, b = b, a
        size = ng


@njit(cache=True)
def _stable_rank_select(w, k):
    """Index at 0-based position ``k`` of the stable ascending sort of ``w``.

    Selects the k-th smallest value, then walks ties in index order, which
    is where a stable sort would leave them.
    """
    v = _kth_smallest(w, k)
    less = 0
    for j in range(w.shape[0]):
        if w[j] < v:
            less += 1
    skip = k - less
    for j in range(w.shape[0]):
        if w[j] == v:
            if skip == 0:
                return j
            skip -= 1
    return -1


@njit(cache=True)
def _rdd_kernel(w, n, key, ctr):
    m = w.shape[0]
    tags = np.empty(n, dtype=np.int64)

    # integer parts, laid out index by index
    i = 0
    for j in range(m):
        c = int(np.floor(n * w[j]))
        for _ in range(c):
            if i < n:
                tags[i] = j
                i += 1

    # weight median joins the domain when a slot is left
    if i < n:
        r = (n + 1) // 2
        if r > m:
            r = m
        tags[i] = _stable_rank_select(w, r - 1)
        i += 1

    size = i
    k = n - size
    if k == 0:
        return tags, 0

    q = np.empty(size)
    acc = 0.0
    for s in range(size):
        acc += w[tags[s]]
        q[s] = acc
    if not acc > 0.0:
        # domain carries no weight (zero-weight median only): treat members alike
        for s in range(size):
            q[s] = s + 1.0
        acc = float(size)

    for r in range(k):
        u = uniform_at(key, ctr + np.uint64(r)) * acc
        tags[i] = tags[_scan(q, size, u)]
        i += 1
    return tags, k


# ---------------------------------------------------------------------------
# public wrappers


def _key_ctr(rng: Rng):
    return np.uint64(rng.key), np.uint64(rng.counter)


def multinomial_resample(weights, n: int | None, rng: Rng) -> np.ndarray:
    """Draw ``n`` independent ancestors by inverting the cumulative weights.

    Consumes exactly ``n`` uniforms.
    """
    w = normalize(weights)
    n = _check_count(n, w.size)
    tags = _multinomial_kernel(w, n, *_key_ctr(rng))
    rng.advance(n)
    return tags


def residual_resample(weights, n: int | None, rng: Rng) -> np.ndarray:
    """Keep ``floor(n * w_i)`` copies of each index, draw the rest from the residuals."""
    w = normalize(weights)
    n = _check_count(n, w.size)
    tags, used = _residual_kernel(w, n, *_key_ctr(rng))
    rng.advance(used)
    return tags


def stratified_resample(weights, n: int | None, rng: Rng) -> np.ndarray:
    """One uniform per stratum ``((k + u_k) / n)``; consumes ``n`` uniforms."""
    w = normalize(weights)
    n = _check_count(n, w.size)
    tags = _stratified_kernel(w, n, *_key_ctr(rng))
    rng.advance(n)
    return tags


def systematic_resample(weights, n: int | None, rng: Rng) -> np.ndarray:
    """A single offset ``u0`` shared by the grid ``(k + u0) / n``."""
    w = normalize(weights)
    n = _check_count(n, w.size)
    tags = _systematic_kernel(w, n, *_key_ctr(rng))
    rng.advance(1)
    return tags


def rdd_median_resample(weights, n: int | None, rng: Rng) -> np.ndarray:
    """Repetitive deterministic domain with median resampling.

    1. Each index ``j`` is copied ``floor(n * w_j)`` times, in index order.
    2. If a slot is still free, the index sitting at rank
       ``(n + 1) // 2`` (1-based, clamped to ``[1, len(w)]``) of the stable
       ascending sort of the weights is appended.
    3. The tags placed so far form the domain. Remaining slots are filled by
       inverse-CDF draws over the domain, each slot weighted by the weight of
       the particle it references, so an index present ``k`` times counts
       ``k`` times.

    Indices with ``floor(n * w_i) == 0`` other than the median never
    receive offspring, which makes the scheme biased. Only the
    ``n - |domain|`` fill-in slots consume uniforms.

    >>> rdd_median_resample([0.5, 0.3, 0.1, 0.1], None, Rng(0)).tolist()
    [0, 0, 1, 3]
    """
    w = normalize(weights)
    n = _check_count(n, w.size)
    tags, used = _rdd_kernel(w, n, *_key_ctr(rng))
    rng.advance(used)
    return tags


Resampler = Callable[..., np.ndarray]

RESAMPLERS: dict[str, Resampler] = {
    "multinomial": multinomial_resample,
    "residual": residual_resample,
    "stratified": stratified_resample,
    "systematic": systematic_resample,
    "rdd": rdd_median_resample,
}
SCHEMES = tuple(RESAMPLERS)


def get_resampler(name: str) -> Resampler:
    try:
        return RESAMPLERS[name]
    except KeyError:
        raise ValueError(
            f"unknown resampler {name!r}; choose from {', '.join(SCHEMES)}"
        ) from None
