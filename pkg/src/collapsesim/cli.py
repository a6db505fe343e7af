"""Command-line interface.

Subcommands: simulate, bounds, reproduce-fig, softmax-check, bench.
Exit codes: 0 success, 1 invalid input (bad arguments, malformed or
inconsistent config), 2 runtime failure (including a failed
softmax-check verification).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import backends
from .errors import InputError, RuntimeFailure, ValidationError
from .cli_io import bench as bench_mod
from .cli_io.config import config_hash, parse_config, resolved_items
from .cli_io.experiment import bounds_table, build_p0, run_experiment, write_outputs
from .cli_io.figures import FIGURE_IDS, reproduce_figure
from .analytics import make_bounds_report
from .softmax_check import (
    TokenDataset,
    WeightMatrix,
    ce_gradient,
    empirical_conditional,
    train_softmax,
)

__all__ = ["main"]

_FORMATS = ("csv", "json", "svg")


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the exit-code contract."""

    def error(self, message):
        raise ValidationError(message)


def _add_output_flags(sub, formats_default="csv"):
    sub.add_argument("--out-dir", default=None, help="output directory")
    sub.add_argument(
        "--format",
        default=None,
        help=f"comma-separated subset of {','.join(_FORMATS)} "
        f"(default {formats_default})",
    )


def _add_run_flags(sub):
    sub.add_argument("--seed", type=int, default=None, help="override the base seed")
    sub.add_argument(
        "--replicates", type=int, default=None, help="override the ensemble size"
    )


def _parse_formats(raw):
    if raw is None:
        return None
    formats = tuple(part.strip() for part in raw.split(",") if part.strip())
    for fmt in formats:
        if fmt not in _FORMATS:
            raise ValidationError(
                f"unknown format {fmt!r}; valid: {', '.join(_FORMATS)}"
            )
    if not formats:
        raise ValidationError("--format must name at least one format")
    return formats


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="collapsesim",
        description="Simulate recursive retraining of a token distribution "
        "and check the collapse dynamics against closed forms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the ensemble described by a config")
    p_sim.add_argument("config", help="path to the experiment config file")
    _add_run_flags(p_sim)
    _add_output_flags(p_sim)

    p_bounds = sub.add_parser(
        "bounds", help="evaluate the closed forms for a config, no simulation"
    )
    p_bounds.add_argument("config", help="path to the experiment config file")
    _add_output_flags(p_bounds)

    p_fig = sub.add_parser("reproduce-fig", help="rebuild a canonical figure")
    p_fig.add_argument(
        "id", help=f"figure id, one of {', '.join(map(str, FIGURE_IDS))}"
    )
    _add_run_flags(p_fig)
    _add_output_flags(p_fig, formats_default="csv,svg")

    p_soft = sub.add_parser(
        "softmax-check",
        help="verify that cross-entropy descent reproduces empirical frequencies",
    )
    p_soft.add_argument("--seed", type=int, default=0, help="seed for the random instance")

    p_bench = sub.add_parser("bench", help="compare sampling backends")
    p_bench.add_argument("--seed", type=int, default=0)
    _add_output_flags(p_bench)
    return parser


def _cmd_simulate(args) -> int:
    cfg = parse_config(args.config).override(
        seed=args.seed,
        replicates=args.replicates,
        out_dir=args.out_dir,
        formats=_parse_formats(args.format),
    )
    result = run_experiment(cfg)
    summary = result.summary
    collapsed = summary.replicates - summary.uncollapsed
    print(f"config_hash {result.cfg_hash}")
    print(
        f"ran {summary.replicates} replicates x {summary.generations} generations "
        f"({cfg.schedule.kind.value}, backend {backends.default_name()})"
    )
    print(f"collapsed {collapsed}/{summary.replicates}")
    for path in result.paths:
        print(f"wrote {path}")
    return 0


def _cmd_bounds(args) -> int:
    cfg = parse_config(args.config).override(
        out_dir=args.out_dir, formats=_parse_formats(args.format)
    )
    p0 = build_p0(cfg)
    report = make_bounds_report(cfg.schedule, p0, cfg.max_generations)
    table = bounds_table("bounds", report)
    if not table.rows:
        print(
            f"no closed forms apply to schedule kind {cfg.schedule.kind.value!r}"
        )
        return 0
    h = config_hash(cfg)
    paths = write_outputs(
        table, h, resolved_items(cfg), cfg.out_dir, cfg.formats, "bounds"
    )
    print(f"config_hash {h}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_reproduce_fig(args) -> int:
    paths = reproduce_figure(
        args.id,
        out_dir=args.out_dir if args.out_dir is not None else "out",
        seed=args.seed if args.seed is not None else 0,
        replicates=args.replicates,
        formats=_parse_formats(args.format) or ("csv", "svg"),
    )
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_softmax_check(args) -> int:
    # fixed all-positive instance: the strict stationarity check
    counts = np.array(
        [
            [3, 1, 2, 1, 5],
            [1, 1, 1, 1, 1],
            [7, 2, 1, 1, 1],
            [2, 6, 4, 3, 1],
        ],
        dtype=np.int64,
    )
    data = TokenDataset(counts=counts)
    result = train_softmax(data, lr=0.5, max_iters=200_000, tol=1e-10)
    fitted = result.weights.softmax_rows()
    target = empirical_conditional(data)
    row_gap = float(np.abs(fitted - target).sum(axis=1).max())

    rng = np.random.default_rng(args.seed)
    rand_counts = rng.integers(1, 9, size=(3, 4))
    rand_data = TokenDataset(counts=rand_counts.astype(np.int64))
    w = WeightMatrix(logits=rng.normal(size=(3, 4)))
    grad = ce_gradient(w, rand_data)
    fd = _finite_difference(w, rand_data)
    denom = max(float(np.abs(fd).max()), 1e-12)
    grad_err = float(np.abs(grad - fd).max()) / denom

    ok = result.converged and row_gap < 1e-4 and grad_err < 1e-5
    print(f"gradient-descent iterations   {result.iterations}")
    print(f"final gradient sup norm       {result.final_gradient_norm:.3e}")
    print(f"max row L1 gap to frequencies {row_gap:.3e}  (tolerance 1e-4)")
    print(f"gradient vs finite differences {grad_err:.3e}  (tolerance 1e-5)")
    print("PASS" if ok else "FAIL")
    if not ok:
        raise RuntimeFailure("softmax stationarity verification failed")
    return 0


def _finite_difference(w, data, step: float = 1e-6) -> np.ndarray:
    from .softmax_check import ce_loss

    base = np.asarray(w.logits, dtype=np.float64)
    out = np.zeros_like(base)
    for i in range(base.shape[0]):
        for j in range(base.shape[1]):
            up = base.copy()
            up[i, j] += step
            down = base.copy()
            down[i, j] -= step
            out[i, j] = (
                ce_loss(WeightMatrix(logits=up), data)
                - ce_loss(WeightMatrix(logits=down), data)
            ) / (2 * step)
    return out


def _cmd_bench(args) -> int:
    table = bench_mod.run_bench(seed=args.seed)
    sys.stdout.write(bench_mod.format_report(table))
    formats = _parse_formats(args.format)
    if args.out_dir is not None:
        from .cli_io.table import emit

        for fmt in formats or ("csv",):
            if fmt == "svg":
                continue
            path = Path(args.out_dir) / f"bench.{fmt}"
            emit(table, fmt, path, cfg_hash="", config_items=())
            print(f"wrote {path}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "bounds": _cmd_bounds,
    "reproduce-fig": _cmd_reproduce_fig,
    "softmax-check": _cmd_softmax_check,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
