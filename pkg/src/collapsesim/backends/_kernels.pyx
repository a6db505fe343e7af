"""Compiled per-generation kernels.

Semantics mirror ``collapsesim.backends.fallback`` exactly; see that module
for the inverse-CDF convention.  Reductions here run left to right, so float
statistics can differ from the numpy backend by rounding only; counts are
bit-identical.
"""

from libc.math cimport fabs
from libc.stdint cimport int64_t

import numpy as np

NAME = "compiled"


def build_cum(const double[::1] probs):
    """Cumulative vector and index of the last strictly positive entry."""
    cdef Py_ssize_t s = probs.shape[0]
    cdef Py_ssize_t i
    cdef Py_ssize_t last = s - 1
    cdef double acc = 0.0
    cum_np = np.empty(s, dtype=np.float64)
    cdef double[::1] cum = cum_np
    cdef bint seen = False
    for i in range(s):
        acc += probs[i]
        cum[i] = acc
        if probs[i] > 0.0:
            last = i
            seen = True
    if not seen:
        last = s - 1
    return cum_np, int(last)


def add_categorical_counts(
    const double[::1] cum,
    Py_ssize_t last_support,
    const double[::1] u,
    int64_t[::1] out,
):
    """Add inverse-CDF draw counts for uniforms ``u`` into ``out``."""
    cdef Py_ssize_t s = cum.shape[0]
    cdef Py_ssize_t k = u.shape[0]
    cdef Py_ssize_t j, lo, hi, mid
    cdef double v
    for j in range(k):
        v = u[j]
        lo = 0
        hi = s
        while lo < hi:
            mid = (lo + hi) >> 1
            if cum[mid] > v:
                hi = mid
            else:
                lo = mid + 1
        if lo > last_support:
            lo = last_support
        out[lo] += 1


def finalize_stats(
    const int64_t[::1] counts,
    long long total,
    const double[::1] ref0,
    const double[::1] ref1,
    double[::1] probs_out,
):
    """Empirical distribution of ``counts`` plus its trajectory statistics.

    Returns (sigma, sup, sup_index, max_count, l1_to_ref0, l1_to_ref1); ties
    in the sup break toward the lowest index.
    """
    cdef Py_ssize_t s = counts.shape[0]
    cdef Py_ssize_t i
    cdef double total_d = <double> total
    cdef double p, sig = 0.0, l1_0 = 0.0, l1_1 = 0.0
    cdef int64_t max_count = -1
    cdef Py_ssize_t sup_idx = 0
    for i in range(s):
        p = (<double> counts[i]) / total_d
        probs_out[i] = p
        sig += p * p
        if counts[i] > max_count:
            max_count = counts[i]
            sup_idx = i
        l1_0 += fabs(p - ref0[i])
        l1_1 += fabs(p - ref1[i])
    return sig, probs_out[sup_idx], int(sup_idx), int(max_count), l1_0, l1_1
