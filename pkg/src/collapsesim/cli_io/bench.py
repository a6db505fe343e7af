"""Backend throughput comparison.

Times the categorical-draw kernel on the pure numpy backend and, when
built, the compiled one, plus numpy's own binomial-decomposition
multinomial sampler as a reference point.  A full-chain timing shows what
the kernel difference means end to end.
"""

from __future__ import annotations

import time
from typing import Optional

import numpy as np

from .. import backends
from ..schedules import fully_synthetic
from ..simulate import ChainConfig, run_chain
from .config import InitSpec, make_initial_distribution
from .table import ResultTable, Row

__all__ = ["run_bench", "format_report"]


def _time_best(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_bench(
    seed: int = 0,
    s: int = 600,
    batch: int = 10_000,
    batches: int = 20,
    repeats: int = 5,
    chain_generations: int = 300,
) -> ResultTable:
    """Measure draws/second per backend; returns long-format rows.

    Rows use run_id = backend name, generation 0, metrics
    ``draws_per_sec`` (kernel microbenchmark), ``chain_generations_per_sec``
    (fully synthetic chain, n = 1000) and ``relative_speed`` (kernel
    throughput over the python backend's).
    """
    p0 = make_initial_distribution(InitSpec(s=s, s_tilde=min(52, s), s0=0.1))
    probs = np.asarray(p0.probs)
    total_draws = batch * batches
    rows = []
    kernel_rates = {}

    rng = np.random.default_rng(seed)
    uniforms = rng.random((batches, batch))

    for name in backends.available():
        be = backends.get(name)
        cum, last = be.build_cum(probs)
        out = np.zeros(s, dtype=np.int64)

        def kernel_pass():
            out[:] = 0
            for i in range(batches):
                be.add_categorical_counts(cum, last, uniforms[i], out)

        kernel_pass()  # warmup
        elapsed = _time_best(kernel_pass, repeats)
        rate = total_draws / elapsed
        kernel_rates[name] = rate
        rows.append(Row(name, 0, "draws_per_sec", rate))

        cfg = ChainConfig(
            p0=p0,
            schedule=fully_synthetic(1000),
            max_generations=chain_generations,
            seed=seed,
            record_l1_vs=frozenset(),
            keep_counts=False,
        )
        run_chain(cfg, 0, backend=name)  # warmup
        chain_elapsed = _time_best(lambda: run_chain(cfg, 0, backend=name), repeats)
        traj = run_chain(cfg, 0, backend=name)
        simulated = traj.collapse_time or chain_generations
        rows.append(Row(name, 0, "chain_generations_per_sec", simulated / chain_elapsed))

    # numpy's multinomial (binomial decomposition) as the external reference
    ref_rng = np.random.default_rng(seed)

    def numpy_pass():
        for _ in range(batches):
            ref_rng.multinomial(batch, probs)

    numpy_pass()
    elapsed = _time_best(numpy_pass, repeats)
    rows.append(Row("numpy_multinomial", 0, "draws_per_sec", total_draws / elapsed))

    python_rate = kernel_rates.get("python")
    if python_rate:
        for name, rate in kernel_rates.items():
            rows.append(Row(name, 0, "relative_speed", rate / python_rate))
    return ResultTable(rows=tuple(rows))


def format_report(table: ResultTable) -> str:
    lines = ["backend benchmark (best of repeated passes)", ""]
    width = max(len(r) for r in table.run_ids())
    for run_id in table.run_ids():
        parts = []
        for row in table.select(run_id=run_id).rows:
            if row.metric == "draws_per_sec":
                parts.append(f"draws/s {row.value:,.0f}")
            elif row.metric == "chain_generations_per_sec":
                parts.append(f"chain gens/s {row.value:,.1f}")
            elif row.metric == "relative_speed":
                parts.append(f"speed x{row.value:.2f}")
        lines.append(f"  {run_id:<{width}}  " + "  ".join(parts))
    return "\n".join(lines) + "\n"
