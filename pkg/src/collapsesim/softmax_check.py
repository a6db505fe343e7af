"""Sanity check that softmax regression reproduces empirical conditionals.

With one-hot context features, full-batch gradient descent on the
cross-entropy of a linear-softmax next-token model has a unique stationary
softmax: the per-context empirical token frequencies.  This module trains
such a model on a count matrix and verifies that property; it is the bridge
between the abstract resampling chain and an actual trained model.

Contexts with a token of zero count are handled asymptotically: the
corresponding logit diverges to -inf, so its softmax entry decays like
1/iteration and the gradient-norm tolerance may never be reached.  Training
therefore reports convergence rather than demanding it by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import EmptyContext, NonConvergence, OutOfRange, ShapeMismatch

__all__ = [
    "TokenDataset",
    "WeightMatrix",
    "TrainResult",
    "empirical_conditional",
    "ce_loss",
    "ce_gradient",
    "train_softmax",
]


@dataclass(frozen=True)
class TokenDataset:
    """(context, next-token) pair counts: ``counts[j, k]`` is how many times
    token k followed context j.  Every context row must hold >= 1 pair.
    """

    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 2:
            raise ShapeMismatch(
                f"counts must be (contexts, tokens>=2), got {c.shape}"
            )
        if np.any(c < 0):
            raise OutOfRange("pair counts must be >= 0")
        empty = np.flatnonzero(c.sum(axis=1) == 0)
        if empty.size:
            raise EmptyContext(f"context {int(empty[0])} has no samples")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_pairs(
        cls, contexts: int, tokens: int, pairs: np.ndarray
    ) -> "TokenDataset":
        """Build from an array of (context, token) index pairs."""
        p = np.asarray(pairs, dtype=np.int64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ShapeMismatch(f"pairs must be (n, 2), got {p.shape}")
        if p.size and (
            p.min() < 0 or p[:, 0].max() >= contexts or p[:, 1].max() >= tokens
        ):
            raise OutOfRange("pair indices out of range")
        counts = np.zeros((contexts, tokens), dtype=np.int64)
        np.add.at(counts, (p[:, 0], p[:, 1]), 1)
        return cls(counts=counts)

    @property
    def contexts(self) -> int:
        return int(self.counts.shape[0])

    @property
    def tokens(self) -> int:
        return int(self.counts.shape[1])

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class WeightMatrix:
    """Logit matrix of a linear-softmax model over one-hot contexts; row j
    holds the logits of the next-token distribution after context j.
    """

    logits: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.logits, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeMismatch(f"logits must be 2-d, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise OutOfRange("logits must be finite")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "logits", w)

    def softmax_rows(self) -> np.ndarray:
        return softmax(self.logits, axis=1)


def empirical_conditional(data: TokenDataset) -> np.ndarray:
    """Row-stochastic matrix of empirical next-token frequencies."""
    row_totals = data.counts.sum(axis=1, keepdims=True)
    return data.counts / row_totals


def _check_shapes(w, data: TokenDataset) -> np.ndarray:
    if isinstance(w, WeightMatrix):
        w = w.logits
    w = np.asarray(w, dtype=np.float64)
    if w.shape != data.counts.shape:
        raise ShapeMismatch(
            f"weights {w.shape} do not match counts {data.counts.shape}"
        )
    return w


def ce_loss(w, data: TokenDataset) -> float:
    """Mean cross-entropy of the dataset under softmax(w) rows; ``w`` is a
    WeightMatrix or a bare logits array of the same shape as the counts.
    """
    w = _check_shapes(w, data)
    log_probs = w - logsumexp(w, axis=1, keepdims=True)
    return float(-(data.counts * log_probs).sum() / data.total)


def ce_gradient(w, data: TokenDataset) -> np.ndarray:
    """Gradient of :func:`ce_loss` in w:
    (1/M) (row_total_j * softmax(w)_jk - counts_jk).
    """
    w = _check_shapes(w, data)
    row_totals = data.counts.sum(axis=1, keepdims=True)
    return (row_totals * softmax(w, axis=1) - data.counts) / data.total


@dataclass(frozen=True)
class TrainResult:
    weights: WeightMatrix
    iterations: int
    final_gradient_norm: float
    converged: bool


def train_softmax(
    data: TokenDataset,
    lr: float = 0.5,
    max_iters: int = 100_000,
    tol: float = 1e-10,
    require_convergence: bool = False,
) -> TrainResult:
    """Full-batch gradient descent from w = 0 until the max-norm of the
    gradient drops below ``tol`` or ``max_iters`` is reached.

    When every count is positive the iteration converges linearly and the
    trained softmax rows equal :func:`empirical_conditional`.  With zero
    counts the optimum is approached only asymptotically; by default the
    result is returned with ``converged=False`` rather than raising.  Pass
    ``require_convergence=True`` to get NonConvergence in that case.
    """
    if lr <= 0.0:
        raise OutOfRange(f"learning rate must be > 0, got {lr}")
    if max_iters < 1:
        raise OutOfRange(f"max_iters must be >= 1, got {max_iters}")
    if tol <= 0.0:
        raise OutOfRange(f"tol must be > 0, got {tol}")
    w = np.zeros_like(data.counts, dtype=np.float64)
    iterations = 0
    grad = ce_gradient(w, data)
    norm = float(np.abs(grad).max())
    while norm >= tol and iterations < max_iters:
        w -= lr * grad
        iterations += 1
        grad = ce_gradient(w, data)
        norm = float(np.abs(grad).max())
    converged = norm < tol
    if require_convergence and not converged:
        raise NonConvergence(
            f"gradient norm {norm:.3e} above tol {tol:.3e} "
            f"after {iterations} iterations",
            final_gradient_norm=norm,
        )
    return TrainResult(
        weights=WeightMatrix(logits=w),
        iterations=iterations,
        final_gradient_norm=norm,
        converged=converged,
    )
