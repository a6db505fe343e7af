"""Probability vectors on the discrete simplex and their summary statistics.

A model here is a distribution over a finite vocabulary of ``s`` tokens,
stored as a float64 vector.  Vectors produced by sampling additionally carry
the integer counts they came from, which is what exact collapse detection
operates on.  Validation rejects bad vectors outright and never renormalizes:
a vector either is a distribution (entries >= 0, sum within 1e-12 of one) or
it is an error.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyVector,
    NegativeEntry,
    SumNotOne,
)

__all__ = [
    "SUM_TOLERANCE",
    "PARTITION_EXACT_MAX",
    "ProbVec",
    "PartitionStats",
    "validate",
    "from_counts",
    "sigma",
    "sup_norm",
    "l1_dist",
    "support_size",
    "partition_stats",
]

SUM_TOLERANCE = 1e-12

# Largest vocabulary for which partition statistics are computed exactly.
PARTITION_EXACT_MAX = 24


@dataclass(frozen=True)
class ProbVec:
    """An immutable probability vector, optionally backed by sample counts.

    ``counts`` and ``total`` are set when the vector is the empirical
    distribution of a finite sample; ``probs`` is then exactly
    ``counts / total``.
    """

    probs: np.ndarray
    counts: Optional[np.ndarray] = None
    total: Optional[int] = None

    @property
    def size(self) -> int:
        return int(self.probs.shape[0])

    def __len__(self) -> int:
        return self.size


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def validate(raw: Sequence[float] | np.ndarray) -> ProbVec:
    """Check a raw vector and wrap it; never renormalizes.

    Raises EmptyVector, NegativeEntry, or SumNotOne (|sum - 1| > 1e-12).
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyVector("probability vector has no entries")
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        bad = int(np.argmin(arr))
        raise NegativeEntry(f"entry {bad} is {arr[bad]!r}; entries must be >= 0")
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise SumNotOne(f"vector sums to {total!r}, not 1 within {SUM_TOLERANCE}")
    return ProbVec(probs=_freeze(arr.copy()))


def from_counts(counts: np.ndarray) -> ProbVec:
    """Empirical distribution of an integer sample-count vector."""
    c = np.asarray(counts, dtype=np.int64)
    if c.ndim != 1 or c.shape[0] == 0:
        raise EmptyVector("count vector must be 1-d and non-empty")
    if np.any(c < 0):
        raise NegativeEntry("counts must be >= 0")
    total = int(c.sum())
    if total <= 0:
        raise EmptyVector("count vector sums to zero")
    probs = c.astype(np.float64) / float(total)
    return ProbVec(probs=_freeze(probs), counts=_freeze(c.copy()), total=total)


def sigma(p: ProbVec) -> float:
    """Collision mass sum_i p_i**2; equals 1 exactly iff p is a point mass."""
    v = p.probs
    return float(v @ v)


def sup_norm(p: ProbVec) -> tuple[float, int]:
    """Largest entry and its index; ties broken toward the lowest index."""
    idx = int(np.argmax(p.probs))
    return float(p.probs[idx]), idx


def l1_dist(p: ProbVec, q: ProbVec) -> float:
    """Total variation distance scaled by two: sum_i |p_i - q_i|."""
    if p.size != q.size:
        raise DimensionMismatch(f"sizes differ: {p.size} vs {q.size}")
    return float(np.abs(p.probs - q.probs).sum())


# Real-valued entries at or below this are treated as zero by support_size.
SUPPORT_EPS = 1e-15


def support_size(p: ProbVec) -> int:
    """Number of strictly positive entries.

    Counts-backed vectors count their positive counts exactly; real-backed
    vectors treat entries <= SUPPORT_EPS as numerical zeros.
    """
    if p.counts is not None:
        return int(np.count_nonzero(p.counts))
    return int(np.count_nonzero(p.probs > SUPPORT_EPS))


@dataclass(frozen=True)
class PartitionStats:
    """Best binary-partition statistics of a distribution.

    ``pi`` is max over token subsets A of min(p(A), 1 - p(A)) and ``lam`` is
    max over A of p(A) * (1 - p(A)).  Both are maximized by the subset whose
    mass is closest to 1/2, so one search yields both.  ``exact`` is False
    when the differencing heuristic was used (s > PARTITION_EXACT_MAX); the
    values are then achievable lower bounds.
    """

    pi: float
    lam: float
    exact: bool


def _closest_subset_sum_exact(weights: np.ndarray) -> float:
    """Subset sum closest to 1/2, by meet-in-the-middle over all subsets."""
    half = weights.shape[0] // 2
    left, right = weights[:half], weights[half:]

    def all_sums(w: np.ndarray) -> np.ndarray:
        sums = np.zeros(1)
        for x in w:
            sums = np.concatenate([sums, sums + x])
        return sums

    ls = all_sums(left)
    rs = np.sort(all_sums(right))
    best = 0.0
    best_gap = 0.5
    targets = 0.5 - ls
    pos = np.searchsorted(rs, targets)
    for a, j in zip(ls, pos):
        for k in (j - 1, j):
            if 0 <= k < rs.shape[0]:
                x = a + rs[k]
                gap = abs(x - 0.5)
                if gap < best_gap:
                    best_gap = gap
                    best = x
    return best


def _closest_subset_sum_differencing(weights: np.ndarray) -> float:
    """Karmarkar-Karp largest-differencing heuristic; achievable, not optimal."""
    heap = [-w for w in weights]
    heapq.heapify(heap)
    while len(heap) > 1:
        a = -heapq.heappop(heap)
        b = -heapq.heappop(heap)
        heapq.heappush(heap, -(a - b))
    diff = -heap[0] if heap else 0.0
    return (1.0 - diff) / 2.0


def partition_stats(p: ProbVec) -> PartitionStats:
    """Best-partition statistics pi and lam of a distribution.

    Exhaustive (meet-in-the-middle over all 2**s subsets) for
    s <= PARTITION_EXACT_MAX, else the deterministic differencing heuristic,
    which yields a lower bound on both quantities.
    """
    exact = p.size <= PARTITION_EXACT_MAX
    if exact:
        x = _closest_subset_sum_exact(p.probs)
    else:
        x = _closest_subset_sum_differencing(p.probs)
    x = float(min(max(x, 0.0), 1.0))
    return PartitionStats(pi=min(x, 1.0 - x), lam=x * (1.0 - x), exact=exact)
