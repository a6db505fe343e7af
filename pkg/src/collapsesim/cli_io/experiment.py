"""End-to-end execution of a configured experiment.

run_experiment builds the initial distribution, runs the ensemble, pairs it
with the closed forms that apply to the schedule, and writes the requested
output files.  Reruns with an identical resolved config are byte-identical;
wall-clock timestamps live only in the ``.meta.json`` sidecar.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..analytics import BoundsReport, make_bounds_report
from ..dist_core import ProbVec
from ..simulate import (
    ChainConfig,
    EnsembleSummary,
    collapse_statistics,
    run_ensemble,
)
from .config import (
    ExperimentConfig,
    config_hash,
    make_initial_distribution,
    resolved_items,
)
from .svgplot import BOUND, FORMULA, MEAN, Panel, Series, compose, panel_element
from .table import ResultTable, Row, emit

__all__ = ["RunOutput", "build_p0", "run_experiment", "summary_table", "bounds_table"]


@dataclass(frozen=True)
class RunOutput:
    table: ResultTable
    summary: Optional[EnsembleSummary]
    bounds: Optional[BoundsReport]
    cfg_hash: str
    paths: tuple


def build_p0(cfg: ExperimentConfig) -> ProbVec:
    return make_initial_distribution(cfg.init)


def _series_rows(rows, run_id, metric, mean, se):
    for i, (v, e) in enumerate(zip(mean, se)):
        rows.append(Row(run_id, i + 1, metric, v, e))


def _bounds_rows(rows, run_id: str, bounds: BoundsReport) -> None:
    if bounds.s_m is not None:
        for i, v in enumerate(bounds.s_m):
            rows.append(Row(run_id, i + 1, "formula_sigma", v))
    if bounds.rho_lower is not None:
        for i, (lo, hi) in enumerate(zip(bounds.rho_lower, bounds.rho_upper)):
            rows.append(Row(run_id, i + 1, "rho_lower", lo))
            rows.append(Row(run_id, i + 1, "rho_upper", hi))
    if bounds.t_lower is not None:
        rows.append(Row(run_id, 0, "t_lower", bounds.t_lower))
        rows.append(Row(run_id, 0, "t_upper", bounds.t_upper))
    if bounds.g_value is not None:
        rows.append(Row(run_id, 0, "g_value", bounds.g_value))
        rows.append(Row(run_id, 0, "g_branch", float(bounds.g_branch)))
    if bounds.deviation is not None:
        rows.append(Row(run_id, 0, "deviation_bound", bounds.deviation.value))
        rows.append(
            Row(run_id, 0, "deviation_vacuous", 1.0 if bounds.deviation.vacuous else 0.0)
        )


def summary_table(
    run_id: str,
    summary: EnsembleSummary,
    bounds: Optional[BoundsReport] = None,
) -> ResultTable:
    """Long-format rows for one ensemble.

    Per-generation metrics: sigma, sup, l1_to_gen0, l1_to_gen1 (mean and
    standard error), rho (with the binomial-proportion standard error), and
    collapse_count histogram entries.  Aggregates are reported at
    generation 0: collapsed_fraction, collapse_time_mean.  Closed-form
    overlays follow when a bounds report is supplied.
    """
    rows = []
    r = summary.replicates
    _series_rows(rows, run_id, "sigma", summary.sigma_mean, summary.sigma_se)
    _series_rows(rows, run_id, "sup", summary.sup_mean, summary.sup_se)
    if summary.l1_gen0_mean is not None:
        _series_rows(rows, run_id, "l1_to_gen0", summary.l1_gen0_mean, summary.l1_gen0_se)
    if summary.l1_gen1_mean is not None:
        _series_rows(rows, run_id, "l1_to_gen1", summary.l1_gen1_mean, summary.l1_gen1_se)
    rho_se = np.sqrt(summary.rho * (1.0 - summary.rho) / r)
    _series_rows(rows, run_id, "rho", summary.rho, rho_se)

    rows.append(
        Row(run_id, 0, "collapsed_fraction", (r - summary.uncollapsed) / r)
    )
    if summary.uncollapsed < r:
        stats = collapse_statistics(summary)
        times = stats.times
        se = (
            float(np.std(times, ddof=1) / math.sqrt(times.size))
            if times.size >= 2
            else None
        )
        rows.append(Row(run_id, 0, "collapse_time_mean", stats.mean_time, se))
        for t, count in enumerate(stats.histogram):
            if count > 0:
                rows.append(Row(run_id, int(t), "collapse_count", float(count)))
    if bounds is not None:
        _bounds_rows(rows, run_id, bounds)
    return ResultTable(rows=tuple(rows))


def bounds_table(run_id: str, bounds: BoundsReport) -> ResultTable:
    rows = []
    _bounds_rows(rows, run_id, bounds)
    return ResultTable(rows=tuple(rows))


def _summary_svg(
    summary: EnsembleSummary, bounds: Optional[BoundsReport], cfg_hash: str
) -> bytes:
    gens = np.arange(1, summary.generations + 1)
    sigma_series = [Series(gens, summary.sigma_mean, MEAN, label="mean")]
    if bounds is not None and bounds.s_m is not None:
        sigma_series.append(Series(gens, bounds.s_m, FORMULA, label="formula"))
    panels = [
        panel_element(
            Panel(
                series=tuple(sigma_series),
                title="dispersion",
                x_label="generation m",
                y_label="sigma_m",
            )
        )
    ]
    rho_series = [Series(gens, summary.rho, MEAN, label="empirical")]
    if bounds is not None and bounds.rho_lower is not None:
        rho_series.append(Series(gens, bounds.rho_lower, BOUND, label="lower bound"))
        rho_series.append(Series(gens, bounds.rho_upper, FORMULA, label="upper bound"))
    panels.append(
        panel_element(
            Panel(
                series=tuple(rho_series),
                title="collapse probability",
                x_label="generation m",
                y_label="rho_m",
            )
        )
    )
    if summary.l1_gen1_mean is not None:
        l1_series = [Series(gens, summary.l1_gen1_mean, MEAN, label="mean")]
        if (
            bounds is not None
            and bounds.deviation is not None
            and math.isfinite(bounds.deviation.value)
            and not bounds.deviation.vacuous
        ):
            level = np.full(gens.shape, bounds.deviation.value)
            l1_series.append(Series(gens, level, BOUND, label="bound"))
        panels.append(
            panel_element(
                Panel(
                    series=tuple(l1_series),
                    title="drift from first generation",
                    x_label="generation m",
                    y_label="L1 distance",
                )
            )
        )
    return compose(panels, cols=len(panels), cfg_hash=cfg_hash)


def write_outputs(
    table: ResultTable,
    cfg_hash: str,
    config_items,
    out_dir,
    formats,
    base_name: str,
    svg_document: Optional[bytes] = None,
) -> tuple:
    """Write each requested format plus the metadata sidecar.

    Partial outputs are removed if any write fails.
    """
    out = Path(out_dir)
    written = []
    try:
        for fmt in formats:
            if fmt == "svg" and svg_document is None:
                continue
            path = out / f"{base_name}.{fmt}"
            emit(
                table,
                fmt,
                path,
                cfg_hash=cfg_hash,
                config_items=config_items,
                svg_document=svg_document,
            )
            written.append(path)
        meta = {
            "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "config_hash": cfg_hash,
            "config": {k: v for k, v in config_items},
        }
        meta_path = out / f"{base_name}.meta.json"
        meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        written.append(meta_path)
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise
    return tuple(written)


def run_experiment(
    cfg: ExperimentConfig,
    *,
    workers: int = 1,
    base_name: str = "results",
    run_id: str = "run",
    write: bool = True,
) -> RunOutput:
    p0 = build_p0(cfg)
    chain_cfg = ChainConfig(
        p0=p0,
        schedule=cfg.schedule,
        max_generations=cfg.max_generations,
        seed=cfg.seed,
    )
    summary = run_ensemble(chain_cfg, cfg.replicates, workers=workers)
    bounds = make_bounds_report(cfg.schedule, p0, cfg.max_generations)
    table = summary_table(run_id, summary, bounds)
    h = config_hash(cfg)
    paths = ()
    if write:
        svg_doc = (
            _summary_svg(summary, bounds, h) if "svg" in cfg.formats else None
        )
        paths = write_outputs(
            table,
            h,
            resolved_items(cfg),
            cfg.out_dir,
            cfg.formats,
            base_name,
            svg_document=svg_doc,
        )
    return RunOutput(table=table, summary=summary, bounds=bounds, cfg_hash=h, paths=paths)
