"""Pure numpy implementation of the per-generation kernels.

This module and the compiled extension ``_kernels`` implement the same three
functions with identical semantics.  Both map uniforms to tokens by inverse
CDF on the same cumulative vector, so given the same uniform stream they
produce bit-identical counts; float statistics may differ between backends
at the last unit in the last place because numpy reduces pairwise while the
compiled loop reduces left to right.

Inverse-CDF convention: token i owns the half-open interval
[cum[i-1], cum[i]), so tokens with probability exactly zero (empty interval)
are never drawn.  A uniform at or above cum[s-1] (possible only through
rounding in the cumulative sum) maps to the last supported token.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def build_cum(probs: np.ndarray) -> tuple[np.ndarray, int]:
    """Cumulative vector and index of the last strictly positive entry."""
    cum = np.cumsum(probs)
    support = np.flatnonzero(probs)
    last_support = int(support[-1]) if support.size else probs.shape[0] - 1
    return cum, last_support


def add_categorical_counts(
    cum: np.ndarray, last_support: int, u: np.ndarray, out: np.ndarray
) -> None:
    """Add inverse-CDF draw counts for uniforms ``u`` into ``out``."""
    idx = np.searchsorted(cum, u, side="right")
    np.minimum(idx, last_support, out=idx)
    out += np.bincount(idx, minlength=out.shape[0])


def finalize_stats(
    counts: np.ndarray,
    total: int,
    ref0: np.ndarray,
    ref1: np.ndarray,
    probs_out: np.ndarray,
) -> tuple[float, float, int, int, float, float]:
    """Empirical distribution of ``counts`` plus its trajectory statistics.

    Returns (sigma, sup, sup_index, max_count, l1_to_ref0, l1_to_ref1); ties
    in the sup break toward the lowest index.
    """
    np.divide(counts, float(total), out=probs_out)
    sig = float(probs_out @ probs_out)
    sup_idx = int(np.argmax(counts))
    max_count = int(counts[sup_idx])
    sup = probs_out[sup_idx]
    l1_0 = float(np.abs(probs_out - ref0).sum())
    l1_1 = float(np.abs(probs_out - ref1).sum())
    return sig, float(sup), sup_idx, max_count, l1_0, l1_1
