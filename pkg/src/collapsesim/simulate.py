"""Monte Carlo simulation of recursive training on model-generated data.

Generation 0 is a fixed real distribution p0.  Generation m >= 1 is the
empirical distribution of a finite training set assembled per a
:mod:`~collapsesim.schedules` schedule from samples of earlier generations.
A replicate is one trajectory of this Markov chain; an ensemble averages
many independent replicates.

Determinism contract
--------------------
Replicate ``r`` of a chain with seed ``S`` uses the PCG64 stream derived
from ``SeedSequence(entropy=(S, r))``, so results are independent of
execution order and worker count.  Within a generation the rng is consumed
in a fixed documented order: first the schedule's source assignment (only
``randomly_sampled`` draws here), then one block of uniforms per source in
increasing source index.  ``run_chain`` is exactly the composition of
:func:`next_generation` steps under this order.

Collapse is detected on integer counts only: generation m is collapsed when
its maximum count equals its training-set size.  For ``fully_synthetic``
schedules the collapsed state is absorbing, so the chain short-circuits and
the remaining generations are filled with the constant absorbed statistics
without consuming the rng.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import backends
from .dist_core import ProbVec, from_counts
from .errors import (
    EmptyTrainingSet,
    InvalidGeneration,
    NoCollapsedReplicates,
    OutOfRange,
    ValidationError,
)
from .schedules import (
    RealDataMode,
    Schedule,
    ScheduleKind,
    counts_for,
)

__all__ = [
    "ChainConfig",
    "Trajectory",
    "EnsembleSummary",
    "CollapseStats",
    "replicate_rng",
    "sample_counts",
    "next_generation",
    "run_chain",
    "run_ensemble",
    "collapse_statistics",
]

_L1_REFS = frozenset({"gen0", "gen1"})


@dataclass(frozen=True)
class ChainConfig:
    """Immutable description of one chain experiment."""

    p0: ProbVec
    schedule: Schedule
    max_generations: int
    seed: int
    record_l1_vs: frozenset = frozenset(_L1_REFS)
    keep_counts: bool = True

    def __post_init__(self) -> None:
        if self.max_generations < 1:
            raise InvalidGeneration(
                f"max_generations must be >= 1, got {self.max_generations}"
            )
        if self.seed < 0:
            raise OutOfRange(f"seed must be >= 0, got {self.seed}")
        refs = frozenset(self.record_l1_vs)
        if not refs <= _L1_REFS:
            raise ValidationError(
                f"record_l1_vs must be a subset of {sorted(_L1_REFS)}"
            )
        object.__setattr__(self, "record_l1_vs", refs)


@dataclass(frozen=True)
class Trajectory:
    """One replicate: per-generation records for m = 1..max_generations.

    ``collapse_time`` is the first generation whose sup norm is exactly one
    (None if never); ``absorbed_token`` is the token carrying all mass at
    that generation.  ``counts`` is None when the config set
    ``keep_counts=False``.
    """

    replicate_id: int
    config: ChainConfig
    counts: Optional[np.ndarray]
    totals: np.ndarray
    sigma: np.ndarray
    sup: np.ndarray
    l1_to_gen0: Optional[np.ndarray]
    l1_to_gen1: Optional[np.ndarray]
    collapse_time: Optional[int]
    absorbed_token: Optional[int]

    @property
    def generations(self) -> int:
        return int(self.totals.shape[0])


def replicate_rng(seed: int, replicate_id: int) -> np.random.Generator:
    """Counter-based replicate stream: (seed, replicate_id) -> Generator."""
    ss = np.random.SeedSequence(entropy=(seed, replicate_id))
    return np.random.Generator(np.random.PCG64(ss))


def sample_counts(
    p: ProbVec, n: int, rng: np.random.Generator, backend: Optional[str] = None
) -> np.ndarray:
    """Multinomial counts of n i.i.d. token draws from p.

    Implemented as n inverse-CDF categorical draws on one block of uniforms;
    tokens with probability exactly zero are never drawn.  ``n = 0`` returns
    a zero vector without consuming the rng.
    """
    if n < 0:
        raise OutOfRange(f"sample size must be >= 0, got {n}")
    be = backends.get(backend)
    out = np.zeros(p.size, dtype=np.int64)
    if n > 0:
        cum, last = be.build_cum(p.probs)
        be.add_categorical_counts(cum, last, rng.random(n), out)
    return out


def next_generation(
    history: Sequence[ProbVec],
    schedule: Schedule,
    m: int,
    rng: np.random.Generator,
    backend: Optional[str] = None,
) -> ProbVec:
    """Train generation m on samples of ``history[0..m-1]`` per the schedule.

    ``history[0]`` is the real distribution; ``history[t]`` for t >= 1 must
    be the counts-backed empirical distribution of generation t.  For
    ``partially_synthetic`` the generation-1 counts are pooled in again
    verbatim (the fixed corpus is reused, not redrawn); for
    ``randomly_sampled`` in fixed-corpus mode, source 0 is redirected to
    generation 1, i.e. resampled with replacement from the realized corpus.
    """
    if m < 1:
        raise InvalidGeneration(f"generation index must be >= 1, got {m}")
    if len(history) < m:
        raise InvalidGeneration(
            f"history has {len(history)} models; generation {m} needs {m}"
        )
    be = backends.get(backend)
    s = history[0].size
    pooled = np.zeros(s, dtype=np.int64)

    if schedule.kind is ScheduleKind.PARTIALLY_SYNTHETIC and m >= 2:
        corpus = history[1].counts
        if corpus is None or history[1].total != schedule.corpus_size:
            raise ValidationError(
                "partially_synthetic needs a counts-backed generation 1 "
                f"holding the corpus of {schedule.corpus_size} samples"
            )
        pooled += corpus
        pooled += sample_counts(history[m - 1], schedule.n, rng, backend)
        return from_counts(pooled)

    nvec = counts_for(schedule, m, rng)
    redirect_real = (
        schedule.kind is ScheduleKind.RANDOMLY_SAMPLED
        and schedule.real_data_mode is RealDataMode.FIXED_CORPUS
        and m >= 2
    )
    for t in np.flatnonzero(nvec):
        t = int(t)
        source = history[1] if (redirect_real and t == 0) else history[t]
        cum, last = be.build_cum(source.probs)
        be.add_categorical_counts(cum, last, rng.random(int(nvec[t])), pooled)
    total = int(pooled.sum())
    if total == 0:
        raise EmptyTrainingSet(f"generation {m} would be trained on 0 samples")
    return from_counts(pooled)


class _History:
    """Per-kind retention of past model vectors and their lazy cumsums."""

    def __init__(self, kind: ScheduleKind, window: Optional[int], be) -> None:
        self.kind = kind
        self.window = window
        self.be = be
        self.probs: list[Optional[np.ndarray]] = []
        self.cums: dict[int, tuple[np.ndarray, int]] = {}

    def append(self, t: int, probs: np.ndarray) -> None:
        assert len(self.probs) == t
        self.probs.append(probs)
        if self.kind is ScheduleKind.FULLY_SYNTHETIC and t >= 1:
            self._drop(t - 1)
        elif self.kind is ScheduleKind.MOST_RECENT:
            old = t - self.window
            if old >= 0:
                self._drop(old)
        elif self.kind is ScheduleKind.PARTIALLY_SYNTHETIC and t >= 2:
            self._drop(t - 1)

    def _drop(self, t: int) -> None:
        # Slot 0 (the real distribution) stays referenced elsewhere anyway;
        # everything else is garbage once outside the sampling window.
        if t > 0:
            self.probs[t] = None
        self.cums.pop(t, None)

    def cum(self, t: int) -> tuple[np.ndarray, int]:
        hit = self.cums.get(t)
        if hit is None:
            probs = self.probs[t]
            assert probs is not None
            hit = self.be.build_cum(probs)
            self.cums[t] = hit
        return hit


def run_chain(
    cfg: ChainConfig, replicate_id: int, backend: Optional[str] = None
) -> Trajectory:
    """Simulate one replicate for generations 1..max_generations."""
    if replicate_id < 0:
        raise OutOfRange(f"replicate_id must be >= 0, got {replicate_id}")
    be = backends.get(backend)
    rng = replicate_rng(cfg.seed, replicate_id)
    sched = cfg.schedule
    kind = sched.kind
    s = cfg.p0.size
    M = cfg.max_generations

    counts_mat = np.zeros((M, s), dtype=np.int64) if cfg.keep_counts else None
    scratch_row = None if cfg.keep_counts else np.zeros(s, dtype=np.int64)
    totals = np.zeros(M, dtype=np.int64)
    sig_arr = np.empty(M, dtype=np.float64)
    sup_arr = np.empty(M, dtype=np.float64)
    l1_0_arr = np.empty(M, dtype=np.float64)
    l1_1_arr = np.empty(M, dtype=np.float64)

    hist = _History(kind, sched.window, be)
    p0 = np.asarray(cfg.p0.probs, dtype=np.float64)
    hist.append(0, p0)
    ref0 = p0
    ref1 = p0  # placeholder until generation 1 exists
    corpus: Optional[np.ndarray] = None
    redirect_real = (
        kind is ScheduleKind.RANDOMLY_SAMPLED
        and sched.real_data_mode is RealDataMode.FIXED_CORPUS
    )

    collapse_time: Optional[int] = None
    absorbed_token: Optional[int] = None

    for m in range(1, M + 1):
        if cfg.keep_counts:
            row = counts_mat[m - 1]
        else:
            row = scratch_row
            row[:] = 0

        if kind is ScheduleKind.FULLY_SYNTHETIC:
            cum, last = hist.cum(m - 1)
            be.add_categorical_counts(cum, last, rng.random(sched.n), row)
            total = sched.n
        elif kind is ScheduleKind.PARTIALLY_SYNTHETIC:
            if m == 1:
                cum, last = hist.cum(0)
                be.add_categorical_counts(
                    cum, last, rng.random(sched.corpus_size), row
                )
                total = sched.corpus_size
            else:
                row += corpus
                cum, last = hist.cum(m - 1)
                be.add_categorical_counts(cum, last, rng.random(sched.n), row)
                total = sched.corpus_size + sched.n
        else:
            nvec = counts_for(sched, m, rng)
            for t in np.flatnonzero(nvec):
                t = int(t)
                src = 1 if (redirect_real and t == 0 and m >= 2) else t
                cum, last = hist.cum(src)
                be.add_categorical_counts(cum, last, rng.random(int(nvec[t])), row)
            total = int(nvec.sum())
            if total == 0:
                raise EmptyTrainingSet(
                    f"generation {m} would be trained on 0 samples"
                )

        probs_new = np.empty(s, dtype=np.float64)
        sig, sup, sup_idx, max_count, l1_0, l1_1 = be.finalize_stats(
            row, total, ref0, ref1, probs_new
        )
        totals[m - 1] = total
        sig_arr[m - 1] = sig
        sup_arr[m - 1] = sup
        l1_0_arr[m - 1] = l1_0
        l1_1_arr[m - 1] = 0.0 if m == 1 else l1_1

        if max_count == total and collapse_time is None:
            collapse_time = m
            absorbed_token = sup_idx

        if m == 1:
            corpus = row.copy()
            ref1 = probs_new

        if (
            kind is ScheduleKind.FULLY_SYNTHETIC
            and collapse_time is not None
            and m < M
        ):
            # Absorbing state: fill the remaining generations and stop.
            if cfg.keep_counts:
                counts_mat[m:] = row
            totals[m:] = total
            sig_arr[m:] = sig
            sup_arr[m:] = sup
            l1_0_arr[m:] = l1_0
            l1_1_arr[m:] = l1_1_arr[m - 1]
            break

        if m < M:
            hist.append(m, probs_new)

    for arr in (totals, sig_arr, sup_arr, l1_0_arr, l1_1_arr):
        arr.setflags(write=False)
    if counts_mat is not None:
        counts_mat.setflags(write=False)
    return Trajectory(
        replicate_id=replicate_id,
        config=cfg,
        counts=counts_mat,
        totals=totals,
        sigma=sig_arr,
        sup=sup_arr,
        l1_to_gen0=l1_0_arr if "gen0" in cfg.record_l1_vs else None,
        l1_to_gen1=l1_1_arr if "gen1" in cfg.record_l1_vs else None,
        collapse_time=collapse_time,
        absorbed_token=absorbed_token,
    )


@dataclass(frozen=True)
class EnsembleSummary:
    """Deterministic reduction of R replicates in replicate order.

    Per-generation arrays have length max_generations.  ``rho`` is the
    fraction of replicates collapsed by each generation (non-decreasing).
    ``collapse_times``/``absorbed_tokens`` use -1 for replicates that never
    collapsed.  ``p_mean``/``p_se`` (entrywise moments of the generation-m
    distribution) are present only when the config kept counts.  Standard
    errors are sample-sd/sqrt(R); NaN when R == 1.
    """

    config: ChainConfig
    replicates: int
    sigma_mean: np.ndarray
    sigma_se: np.ndarray
    sup_mean: np.ndarray
    sup_se: np.ndarray
    l1_gen0_mean: Optional[np.ndarray]
    l1_gen0_se: Optional[np.ndarray]
    l1_gen1_mean: Optional[np.ndarray]
    l1_gen1_se: Optional[np.ndarray]
    rho: np.ndarray
    collapse_times: np.ndarray
    absorbed_tokens: np.ndarray
    p_mean: Optional[np.ndarray]
    p_se: Optional[np.ndarray]

    @property
    def generations(self) -> int:
        return int(self.sigma_mean.shape[0])

    @property
    def uncollapsed(self) -> int:
        return int(np.sum(self.collapse_times < 0))


def _mean_se(sums: np.ndarray, sumsq: np.ndarray, r: int):
    mean = sums / r
    if r < 2:
        se = np.full_like(mean, np.nan)
    else:
        var = np.maximum(sumsq - r * mean * mean, 0.0) / (r - 1)
        se = np.sqrt(var / r)
    return mean, se


def run_ensemble(
    cfg: ChainConfig,
    replicates: int,
    workers: int = 1,
    backend: Optional[str] = None,
) -> EnsembleSummary:
    """Run ``replicates`` independent chains and reduce them.

    The reduction is a fixed-order accumulation over replicate ids, so the
    result is byte-identical for any worker count.
    """
    if replicates < 1:
        raise OutOfRange(f"replicates must be >= 1, got {replicates}")
    M = cfg.max_generations
    s = cfg.p0.size
    acc = {
        name: (np.zeros(M), np.zeros(M))
        for name in ("sigma", "sup", "l1_0", "l1_1")
    }
    rho_counts = np.zeros(M, dtype=np.int64)
    collapse_times = np.full(replicates, -1, dtype=np.int64)
    absorbed_tokens = np.full(replicates, -1, dtype=np.int64)
    if cfg.keep_counts:
        p_sum = np.zeros((M, s))
        p_sumsq = np.zeros((M, s))
    else:
        p_sum = p_sumsq = None

    def reduce_one(traj: Trajectory) -> None:
        r = traj.replicate_id
        for name, series in (
            ("sigma", traj.sigma),
            ("sup", traj.sup),
            ("l1_0", traj.l1_to_gen0),
            ("l1_1", traj.l1_to_gen1),
        ):
            if series is None:
                continue
            sums, sumsq = acc[name]
            sums += series
            sumsq += series * series
        if traj.collapse_time is not None:
            collapse_times[r] = traj.collapse_time
            absorbed_tokens[r] = traj.absorbed_token
            rho_counts[traj.collapse_time - 1 :] += 1
        if p_sum is not None:
            probs = traj.counts / traj.totals[:, None]
            np.add(p_sum, probs, out=p_sum)
            np.add(p_sumsq, probs * probs, out=p_sumsq)

    if workers <= 1:
        for r in range(replicates):
            reduce_one(run_chain(cfg, r, backend))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, replicates // (workers * 4))
            for traj in pool.map(
                _run_chain_task,
                ((cfg, r, backend) for r in range(replicates)),
                chunksize=chunk,
            ):
                reduce_one(traj)

    sigma_mean, sigma_se = _mean_se(*acc["sigma"], replicates)
    sup_mean, sup_se = _mean_se(*acc["sup"], replicates)
    out = {
        "l1_gen0_mean": None,
        "l1_gen0_se": None,
        "l1_gen1_mean": None,
        "l1_gen1_se": None,
    }
    if "gen0" in cfg.record_l1_vs:
        out["l1_gen0_mean"], out["l1_gen0_se"] = _mean_se(*acc["l1_0"], replicates)
    if "gen1" in cfg.record_l1_vs:
        out["l1_gen1_mean"], out["l1_gen1_se"] = _mean_se(*acc["l1_1"], replicates)
    if p_sum is not None:
        p_mean, p_se = _mean_se(p_sum, p_sumsq, replicates)
    else:
        p_mean = p_se = None
    return EnsembleSummary(
        config=cfg,
        replicates=replicates,
        sigma_mean=sigma_mean,
        sigma_se=sigma_se,
        sup_mean=sup_mean,
        sup_se=sup_se,
        rho=rho_counts / replicates,
        collapse_times=collapse_times,
        absorbed_tokens=absorbed_tokens,
        p_mean=p_mean,
        p_se=p_se,
        **out,
    )


def _run_chain_task(args) -> Trajectory:
    cfg, r, backend = args
    return run_chain(cfg, r, backend)


@dataclass(frozen=True)
class CollapseStats:
    """Collapse-time summary over the collapsed replicates of an ensemble."""

    mean_time: float
    times: np.ndarray
    histogram: np.ndarray
    absorbed_frequencies: np.ndarray
    collapsed_fraction: float


def collapse_statistics(summary: EnsembleSummary) -> CollapseStats:
    """Collapse-time statistics; uncollapsed replicates are excluded, never
    imputed.  Raises NoCollapsedReplicates when nothing collapsed.
    """
    times = summary.collapse_times[summary.collapse_times > 0]
    if times.size == 0:
        raise NoCollapsedReplicates(
            f"none of the {summary.replicates} replicates collapsed within "
            f"{summary.generations} generations"
        )
    hist = np.bincount(times, minlength=summary.generations + 1)
    s = summary.config.p0.size
    tokens = summary.absorbed_tokens[summary.absorbed_tokens >= 0]
    freq = np.bincount(tokens, minlength=s) / summary.replicates
    return CollapseStats(
        mean_time=float(times.mean()),
        times=np.sort(times),
        histogram=hist,
        absorbed_frequencies=freq,
        collapsed_fraction=times.size / summary.replicates,
    )
