"""Training-data schedules: how many samples generation m draws from each
earlier model.

A schedule maps a generation index m >= 1 to an integer vector
``(n_t)_{t=0..m-1}``: generation m is trained on ``n_t`` fresh samples from
model ``t`` (model 0 is the real data distribution).  Four kinds:

``fully_synthetic``
    All n samples from the immediately preceding model.

``partially_synthetic``
    A fixed real corpus of N samples (drawn once, at generation 1, and pooled
    into every later generation unchanged) plus n fresh samples from the
    preceding model.

``most_recent``
    floor(n/K) samples from each of the most recent min(m, K) models; the
    remainder n mod K is dropped.  When floor(n/K) == 0 (window wider than
    the budget) that rule would train on nothing, so the budget is instead
    split as evenly as integers allow over the window, remainder to the most
    recent models; the total is then exactly n.

``randomly_sampled``
    Each of the n samples picks its source uniformly at random among all m
    previous models; the only kind whose count vector is random.

Only ``randomly_sampled`` consumes the rng; the other kinds are deterministic
and never touch it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidGeneration, OutOfRange, ValidationError

__all__ = [
    "ScheduleKind",
    "RealDataMode",
    "Schedule",
    "fully_synthetic",
    "partially_synthetic",
    "most_recent",
    "randomly_sampled",
    "counts_for",
    "total_samples",
]


class ScheduleKind(str, enum.Enum):
    FULLY_SYNTHETIC = "fully_synthetic"
    PARTIALLY_SYNTHETIC = "partially_synthetic"
    MOST_RECENT = "most_recent"
    RANDOMLY_SAMPLED = "randomly_sampled"


class RealDataMode(str, enum.Enum):
    """Source of generation-0 samples for ``randomly_sampled``.

    ``FRESH`` draws them i.i.d. from the real distribution; ``FIXED_CORPUS``
    resamples with replacement from the realized generation-1 training set,
    i.e. draws i.i.d. from the first trained model.
    """

    FRESH = "fresh"
    FIXED_CORPUS = "fixed_corpus"


@dataclass(frozen=True)
class Schedule:
    kind: ScheduleKind
    n: int
    corpus_size: Optional[int] = None
    window: Optional[int] = None
    real_data_mode: RealDataMode = RealDataMode.FRESH

    def __post_init__(self) -> None:
        if self.n < 1:
            raise OutOfRange(f"per-generation budget n must be >= 1, got {self.n}")
        if self.kind is ScheduleKind.PARTIALLY_SYNTHETIC:
            if self.corpus_size is None or self.corpus_size < 1:
                raise ValidationError(
                    "partially_synthetic requires a corpus size N >= 1"
                )
        elif self.corpus_size is not None:
            raise ValidationError(f"corpus_size is not a {self.kind.value} parameter")
        if self.kind is ScheduleKind.MOST_RECENT:
            if self.window is None or self.window < 1:
                raise ValidationError("most_recent requires a window K >= 1")
        elif self.window is not None:
            raise ValidationError(f"window is not a {self.kind.value} parameter")
        if (
            self.real_data_mode is not RealDataMode.FRESH
            and self.kind is not ScheduleKind.RANDOMLY_SAMPLED
        ):
            raise ValidationError("real_data_mode applies only to randomly_sampled")


def fully_synthetic(n: int) -> Schedule:
    return Schedule(kind=ScheduleKind.FULLY_SYNTHETIC, n=n)


def partially_synthetic(n: int, corpus_size: int) -> Schedule:
    return Schedule(
        kind=ScheduleKind.PARTIALLY_SYNTHETIC, n=n, corpus_size=corpus_size
    )


def most_recent(n: int, window: int) -> Schedule:
    return Schedule(kind=ScheduleKind.MOST_RECENT, n=n, window=window)


def randomly_sampled(
    n: int, real_data_mode: RealDataMode | str = RealDataMode.FRESH
) -> Schedule:
    return Schedule(
        kind=ScheduleKind.RANDOMLY_SAMPLED,
        n=n,
        real_data_mode=RealDataMode(real_data_mode),
    )


def _most_recent_counts(n: int, window: int, m: int) -> np.ndarray:
    counts = np.zeros(m, dtype=np.int64)
    lo = max(0, m - window)
    per_model = n // window
    if per_model >= 1:
        counts[lo:m] = per_model
    else:
        width = m - lo
        base, rem = divmod(n, width)
        counts[lo:m] = base
        if rem:
            counts[m - rem : m] += 1
    return counts


def counts_for(
    schedule: Schedule, m: int, rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    """Sample-count vector ``(n_t)_{t=0..m-1}`` for generation m.

    Only ``randomly_sampled`` uses ``rng``; passing one to the other kinds is
    allowed but it is never consumed.
    """
    if m < 1:
        raise InvalidGeneration(f"generation index must be >= 1, got {m}")
    counts = np.zeros(m, dtype=np.int64)
    if schedule.kind is ScheduleKind.FULLY_SYNTHETIC:
        counts[m - 1] = schedule.n
    elif schedule.kind is ScheduleKind.PARTIALLY_SYNTHETIC:
        counts[0] = schedule.corpus_size
        if m >= 2:
            counts[m - 1] += schedule.n
    elif schedule.kind is ScheduleKind.MOST_RECENT:
        counts = _most_recent_counts(schedule.n, schedule.window, m)
    else:
        if rng is None:
            raise ValidationError("randomly_sampled schedule needs an rng")
        picks = rng.integers(0, m, size=schedule.n)
        counts = np.bincount(picks, minlength=m).astype(np.int64)
    return counts


def total_samples(schedule: Schedule, m: int) -> int:
    """Total training-set size at generation m; never consumes rng."""
    if m < 1:
        raise InvalidGeneration(f"generation index must be >= 1, got {m}")
    if schedule.kind is ScheduleKind.FULLY_SYNTHETIC:
        return schedule.n
    if schedule.kind is ScheduleKind.PARTIALLY_SYNTHETIC:
        return schedule.corpus_size + (schedule.n if m >= 2 else 0)
    if schedule.kind is ScheduleKind.MOST_RECENT:
        per_model = schedule.n // schedule.window
        if per_model >= 1:
            return min(m, schedule.window) * per_model
        return schedule.n
    return schedule.n
