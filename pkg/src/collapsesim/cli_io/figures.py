"""Canonical figure reproduction.

Each figure id runs a fixed configuration and writes a data CSV plus an
SVG with the standard styling (yellow replicate traces, red empirical
mean, blue dashed closed form, red dashed bound).  Scales follow the
Monte Carlo study this package documents:

  1  three-token simplex trajectories under fully synthetic retraining
  2  mean total-collapse time against the synthetic budget n, with the
     closed-form lower bound on the expected collapse time
  3  partially synthetic dispersion and drift for n in {10, 100, 1000}
  5  window schedules K in {1, 4, 16} and randomly sampled sources:
     dispersion, drift and collapse-time histograms over 500 generations
  6  partially synthetic runs for initial dispersions S0 in {0.1, 0.5, 0.9}

The initial distribution behind figure 1 is a symmetric Dirichlet(1) draw
from a seed-derived stream; the source distribution there is otherwise
unspecified, so this stand-in is part of this package's contract rather
than of the study it follows.  Replicate traces drawn into SVGs are capped
at 40 per panel to keep documents small; means always use every replicate.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Optional

import numpy as np

from ..analytics import expected_t_bounds, make_bounds_report
from ..dist_core import ProbVec, sigma, support_size
from ..errors import OutOfRange, RuntimeFailure, UnknownFigure
from ..schedules import (
    Schedule,
    fully_synthetic,
    most_recent,
    partially_synthetic,
    randomly_sampled,
)
from ..simulate import ChainConfig, collapse_statistics, run_chain, run_ensemble
from .config import InitSpec, make_initial_distribution
from .experiment import summary_table, write_outputs
from .svgplot import (
    BOUND,
    FORMULA,
    MEAN,
    TRACE,
    Panel,
    Series,
    Style,
    compose,
    panel_element,
    simplex_element,
)
from .table import ResultTable, Row

__all__ = ["FIGURE_IDS", "reproduce_figure"]

FIGURE_IDS = (1, 2, 3, 5, 6)

_DEFAULT_REPLICATES = {1: 12, 2: 100, 3: 100, 5: 100, 6: 100}
_TRACE_LIMIT = 40
_HIST_STYLE = Style(stroke="#4878a8", opacity=0.85)

# canonical initial-distribution parameters shared by figures 2, 3, 5, 6
_S, _S_TILDE, _S0 = 600, 52, 0.1


def _two_level(s0: float = _S0) -> ProbVec:
    return make_initial_distribution(InitSpec(s=_S, s_tilde=_S_TILDE, s0=s0))


def _figure_items(fig_id: int, seed: int, replicates: int, extra=()) -> list:
    items = [
        ("figure", str(fig_id)),
        ("replicates", str(replicates)),
        ("seed", str(seed)),
    ]
    items.extend((k, str(v)) for k, v in extra)
    return sorted(items)


def _figure_hash(items) -> str:
    text = "".join(f"{k} = {v}\n" for k, v in items)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _traces(cfg: ChainConfig, count: int) -> list:
    return [run_chain(cfg, r) for r in range(count)]


def _trace_series(trajs, attr: str) -> list:
    gens = np.arange(1, trajs[0].generations + 1)
    label_used = False
    out = []
    for traj in trajs:
        out.append(
            Series(
                gens,
                getattr(traj, attr),
                TRACE,
                label=None if label_used else "replicates",
            )
        )
        label_used = True
    return out


def _profile_panel(p0: ProbVec, title: str) -> Panel:
    tokens = np.arange(1, p0.size + 1, dtype=float)
    return Panel(
        series=(Series(tokens, p0.probs, MEAN),),
        title=title,
        x_label="token",
        y_label="probability",
        y_scale="log",
    )


def _figure_1(seed: int, replicates: int):
    rng = np.random.default_rng(np.random.SeedSequence((seed, 1_000_003)))
    p0 = make_initial_distribution(InitSpec(dirichlet_s=3), rng)
    cfg = ChainConfig(
        p0=p0,
        schedule=fully_synthetic(1000),
        max_generations=3000,
        seed=seed,
    )
    trajs = _traces(cfg, replicates)

    rows = []
    clipped = []
    for traj in trajs:
        upto = traj.collapse_time or traj.generations
        probs = traj.counts[:upto] / traj.totals[:upto, None]
        clipped.append(np.vstack([p0.probs, probs]))
        run_id = f"rep{traj.replicate_id}"
        for m in range(upto):
            for token in range(3):
                rows.append(Row(run_id, m + 1, f"p_{token}", probs[m, token]))
        if traj.collapse_time is not None:
            rows.append(Row(run_id, 0, "collapse_time", float(traj.collapse_time)))

    sup_panel = Panel(
        series=tuple(_trace_series(trajs, "sup")),
        title="largest probability",
        x_label="generation m",
        y_label="sup norm",
    )
    panels = [
        simplex_element(clipped, title="trajectories over the simplex"),
        panel_element(sup_panel),
    ]
    extra = [
        ("schedule.kind", "fully_synthetic"),
        ("schedule.n", 1000),
        ("init.dirichlet_s", 3),
        ("max_generations", cfg.max_generations),
    ]
    return ResultTable(rows=tuple(rows)), panels, 2, extra


def _figure_2(seed: int, replicates: int):
    ns = (10, 50, 100, 150, 200, 250, 300, 350, 400)
    p0 = _two_level()
    s0 = sigma(p0)
    s_tilde = support_size(p0)

    rows = []
    means = []
    lowers = []
    for n in ns:
        run_id = f"n={n}"
        max_gen = 25 * n + 400
        for _ in range(3):
            cfg = ChainConfig(
                p0=p0,
                schedule=fully_synthetic(n),
                max_generations=max_gen,
                seed=seed,
                record_l1_vs=frozenset(),
                keep_counts=False,
            )
            summary = run_ensemble(cfg, replicates)
            if summary.uncollapsed == 0:
                break
            max_gen *= 4
        else:
            raise RuntimeFailure(
                f"replicates failed to collapse within {max_gen} generations (n={n})"
            )
        stats = collapse_statistics(summary)
        se = float(np.std(stats.times, ddof=1) / np.sqrt(stats.times.size))
        t_lo, t_hi = expected_t_bounds(s0, n, s_tilde)
        rows.append(Row(run_id, 0, "collapse_time_mean", stats.mean_time, se))
        rows.append(Row(run_id, 0, "t_lower", t_lo))
        rows.append(Row(run_id, 0, "t_upper", t_hi))
        means.append(stats.mean_time)
        lowers.append(t_lo)

    ns_arr = np.asarray(ns, dtype=float)
    t_panel = Panel(
        series=(
            Series(ns_arr, np.asarray(lowers), BOUND, label="lower bound"),
            Series(ns_arr, np.asarray(means), MEAN, label="mean T", kind="cross"),
        ),
        title="mean total-collapse time",
        x_label="sample size n",
        y_label="generations",
    )
    panels = [
        panel_element(_profile_panel(p0, "initial distribution")),
        panel_element(t_panel),
    ]
    extra = [
        ("schedule.kind", "fully_synthetic"),
        ("schedule.n", ",".join(str(n) for n in ns)),
        ("init.s", _S),
        ("init.s_tilde", _S_TILDE),
        ("init.S0", _S0),
    ]
    return ResultTable(rows=tuple(rows)), panels, 2, extra


def _ensemble_with_traces(
    p0: ProbVec,
    schedule: Schedule,
    max_generations: int,
    seed: int,
    replicates: int,
):
    cfg = ChainConfig(
        p0=p0,
        schedule=schedule,
        max_generations=max_generations,
        seed=seed,
        keep_counts=False,
    )
    summary = run_ensemble(cfg, replicates)
    trajs = _traces(cfg, min(replicates, _TRACE_LIMIT))
    return summary, trajs


def _sigma_panel(trajs, summary, formula, title):
    gens = np.arange(1, summary.generations + 1)
    series = _trace_series(trajs, "sigma")
    series.append(Series(gens, summary.sigma_mean, MEAN, label="mean"))
    if formula is not None:
        series.append(Series(gens, formula, FORMULA, label="formula"))
    return Panel(
        series=tuple(series),
        title=title,
        x_label="generation m",
        y_label="sigma_m",
    )


def _l1_panel(trajs, summary, title):
    gens = np.arange(1, summary.generations + 1)
    series = _trace_series(trajs, "l1_to_gen1")
    series.append(Series(gens, summary.l1_gen1_mean, MEAN, label="mean"))
    return Panel(
        series=tuple(series),
        title=title,
        x_label="generation m",
        y_label="drift from generation 1",
    )


def _summary_rows(rows, run_id, summary, s_m=None):
    gens = range(1, summary.generations + 1)
    for m, v, e in zip(gens, summary.sigma_mean, summary.sigma_se):
        rows.append(Row(run_id, m, "sigma", v, e))
    for m, v, e in zip(gens, summary.l1_gen1_mean, summary.l1_gen1_se):
        rows.append(Row(run_id, m, "l1_to_gen1", v, e))
    if s_m is not None:
        for m, v in zip(gens, s_m):
            rows.append(Row(run_id, m, "formula_sigma", v))


def _figure_3(seed: int, replicates: int):
    ns = (10, 100, 1000)
    p0 = _two_level()
    rows = []
    sigma_panels = []
    l1_panels = []
    for n in ns:
        schedule = partially_synthetic(n, 100)
        summary, trajs = _ensemble_with_traces(p0, schedule, 50, seed, replicates)
        report = make_bounds_report(schedule, p0, 50)
        _summary_rows(rows, f"n={n}", summary, report.s_m)
        sigma_panels.append(
            panel_element(_sigma_panel(trajs, summary, report.s_m, f"dispersion, n = {n}"))
        )
        l1_panels.append(panel_element(_l1_panel(trajs, summary, f"drift, n = {n}")))
    extra = [
        ("schedule.kind", "partially_synthetic"),
        ("schedule.N", 100),
        ("schedule.n", ",".join(str(n) for n in ns)),
        ("init.s", _S),
        ("init.s_tilde", _S_TILDE),
        ("init.S0", _S0),
        ("max_generations", 50),
    ]
    return ResultTable(rows=tuple(rows)), sigma_panels + l1_panels, 3, extra


def _hist_panel(summary, title):
    series = []
    if summary.uncollapsed < summary.replicates:
        stats = collapse_statistics(summary)
        support = np.flatnonzero(stats.histogram)
        lo, hi = support.min(), support.max()
        centers = np.arange(lo, hi + 1, dtype=float)
        heights = stats.histogram[lo : hi + 1].astype(float)
        series.append(Series(centers, heights, _HIST_STYLE, kind="bar"))
        top = float(heights.max())
        series.append(
            Series(
                np.array([stats.mean_time, stats.mean_time]),
                np.array([0.0, top]),
                MEAN,
                label="mean T",
            )
        )
    else:
        title = f"{title} (no collapse)"
    return Panel(
        series=tuple(series),
        title=title,
        x_label="collapse time T",
        y_label="runs",
    )


def _figure_5(seed: int, replicates: int):
    columns = (
        ("K=1", fully_synthetic(10)),
        ("K=4", most_recent(10, 4)),
        ("K=16", most_recent(10, 16)),
        ("random", randomly_sampled(10)),
    )
    p0 = _two_level()
    rows = []
    sigma_panels = []
    l1_panels = []
    hist_panels = []
    for run_id, schedule in columns:
        summary, trajs = _ensemble_with_traces(p0, schedule, 500, seed, replicates)
        _summary_rows(rows, run_id, summary)
        collapsed = summary.replicates - summary.uncollapsed
        rows.append(
            Row(run_id, 0, "collapsed_fraction", collapsed / summary.replicates)
        )
        if collapsed:
            stats = collapse_statistics(summary)
            rows.append(Row(run_id, 0, "collapse_time_mean", stats.mean_time))
            for t, count in enumerate(stats.histogram):
                if count > 0:
                    rows.append(Row(run_id, int(t), "collapse_count", float(count)))
        label = run_id.replace("=", " = ")
        sigma_panels.append(
            panel_element(_sigma_panel(trajs, summary, None, f"dispersion, {label}"))
        )
        l1_panels.append(panel_element(_l1_panel(trajs, summary, f"drift, {label}")))
        hist_panels.append(panel_element(_hist_panel(summary, f"collapse times, {label}")))
    extra = [
        ("columns", "K=1,K=4,K=16,random"),
        ("schedule.n", 10),
        ("init.s", _S),
        ("init.s_tilde", _S_TILDE),
        ("init.S0", _S0),
        ("max_generations", 500),
    ]
    return (
        ResultTable(rows=tuple(rows)),
        sigma_panels + l1_panels + hist_panels,
        4,
        extra,
    )


def _figure_6(seed: int, replicates: int):
    s0s = (0.1, 0.5, 0.9)
    schedule = partially_synthetic(10, 100)
    rows = []
    profile_panels = []
    sigma_panels = []
    l1_panels = []
    for s0 in s0s:
        p0 = _two_level(s0)
        summary, trajs = _ensemble_with_traces(p0, schedule, 50, seed, replicates)
        report = make_bounds_report(schedule, p0, 50)
        _summary_rows(rows, f"S0={s0}", summary, report.s_m)
        profile_panels.append(
            panel_element(_profile_panel(p0, f"initial distribution, S0 = {s0}"))
        )
        sigma_panels.append(
            panel_element(
                _sigma_panel(trajs, summary, report.s_m, f"dispersion, S0 = {s0}")
            )
        )
        l1_panels.append(panel_element(_l1_panel(trajs, summary, f"drift, S0 = {s0}")))
    extra = [
        ("schedule.kind", "partially_synthetic"),
        ("schedule.N", 100),
        ("schedule.n", 10),
        ("init.s", _S),
        ("init.s_tilde", _S_TILDE),
        ("init.S0", ",".join(str(v) for v in s0s)),
        ("max_generations", 50),
    ]
    return (
        ResultTable(rows=tuple(rows)),
        profile_panels + sigma_panels + l1_panels,
        3,
        extra,
    )


_BUILDERS = {1: _figure_1, 2: _figure_2, 3: _figure_3, 5: _figure_5, 6: _figure_6}


def reproduce_figure(
    fig_id: int,
    out_dir="out",
    seed: int = 0,
    replicates: Optional[int] = None,
    formats=("csv", "svg"),
) -> tuple:
    """Run the canonical configuration for ``fig_id`` and write its files.

    Returns the written paths (data CSV/JSON, SVG panels, metadata
    sidecar).  Unknown ids raise UnknownFigure.
    """
    try:
        fig_id = int(fig_id)
    except (TypeError, ValueError):
        raise UnknownFigure(f"figure id must be an integer, got {fig_id!r}")
    if fig_id not in _BUILDERS:
        raise UnknownFigure(
            f"unknown figure id {fig_id}; available: {', '.join(map(str, FIGURE_IDS))}"
        )
    reps = replicates if replicates is not None else _DEFAULT_REPLICATES[fig_id]
    if reps < 1:
        raise OutOfRange(f"replicates must be >= 1, got {reps}")
    table, panels, cols, extra = _BUILDERS[fig_id](seed, reps)
    items = _figure_items(fig_id, seed, reps, extra)
    h = _figure_hash(items)
    svg_doc = None
    if "svg" in formats:
        svg_doc = compose(panels, cols=cols, cfg_hash=h, description=f"figure {fig_id}")
    return write_outputs(
        table,
        h,
        items,
        out_dir,
        formats,
        f"fig{fig_id}",
        svg_document=svg_doc,
    )
