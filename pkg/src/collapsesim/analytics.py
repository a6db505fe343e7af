"""Closed-form predictions and bounds for the collapse chain.

Everything here is a deterministic function of the chain parameters: the
collision-mass recursion under fully synthetic training, collapse
probability and expected-collapse-time sandwiches, the fixed-corpus
collision-mass formula, the combinatorial concentration factor G_n(s) with
its deviation bounds, and the maximal synthetic budget compatible with a
target deviation.  Monte Carlo ensembles from :mod:`~collapsesim.simulate`
are checked against these, never the other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dist_core import ProbVec
from .errors import OutOfRange
from .schedules import Schedule, ScheduleKind

__all__ = [
    "C0",
    "C1",
    "s_m_fully",
    "rho_bounds",
    "expected_t_bounds",
    "s_m_partial",
    "g_n",
    "g_n_branch",
    "DeviationBound",
    "deviation_bound",
    "phi",
    "concentration_tail",
    "GeneralDeviationBound",
    "deviation_bound_general",
    "MaxSyntheticBudget",
    "max_synthetic_n",
    "prop1_limit_law",
    "BoundsReport",
    "make_bounds_report",
]

# Constants of the concentration factor G_n(s).
C0 = math.exp(3.0) / (2.0 * math.pi)
C1 = 6.0 * math.e / math.pi**1.5

# Deviation bounds above this are vacuous: an L1 distance never exceeds 2.
TRIVIAL_L1_CAP = 2.0


def _check_sigma(s0: float) -> None:
    if not 0.0 < s0 <= 1.0:
        raise OutOfRange(f"collision mass must be in (0, 1], got {s0}")


def s_m_fully(s0: float, n: int, m: int) -> float:
    """Expected collision mass E[sigma_m] under fully synthetic training.

    Solves S_m = 1/n + (1 - 1/n) * S_{m-1} with S_0 = s0:
    S_m = 1 - (1 - 1/n)**m * (1 - s0).
    """
    _check_sigma(s0)
    if n < 1:
        raise OutOfRange(f"sample size must be >= 1, got {n}")
    if m < 0:
        raise OutOfRange(f"generation must be >= 0, got {m}")
    return 1.0 - (1.0 - 1.0 / n) ** m * (1.0 - s0)


def rho_bounds(s0: float, n: int, s_tilde: int, m: int) -> tuple[float, float]:
    """Sandwich on the collapse probability rho_m, clamped to [0, 1].

    1 - n(1-s0)(1-1/n)**m  <=  rho_m  <=  1 - (1-s0)/(1-1/s_tilde) (1-1/n)**m
    where s_tilde is the initial support size.
    """
    _check_sigma(s0)
    if n < 2:
        raise OutOfRange(f"sample size must be >= 2, got {n}")
    if s_tilde < 2:
        raise OutOfRange(f"initial support must be >= 2, got {s_tilde}")
    if m < 0:
        raise OutOfRange(f"generation must be >= 0, got {m}")
    decay = (1.0 - 1.0 / n) ** m
    lower = 1.0 - n * (1.0 - s0) * decay
    upper = 1.0 - (1.0 - s0) / (1.0 - 1.0 / s_tilde) * decay
    return max(0.0, lower), min(1.0, upper)


def expected_t_bounds(s0: float, n: int, s_tilde: int) -> tuple[float, float]:
    """Sandwich on the expected collapse time E[T]:

    1 + (1-s0)(n-1)/(1-1/s_tilde)  <=  E[T]  <=  1 + (1-s0) n (n-1).
    """
    _check_sigma(s0)
    if n < 1:
        raise OutOfRange(f"sample size must be >= 1, got {n}")
    if s_tilde < 2:
        raise OutOfRange(f"initial support must be >= 2, got {s_tilde}")
    lower = 1.0 + (1.0 - s0) * (n - 1) / (1.0 - 1.0 / s_tilde)
    upper = 1.0 + (1.0 - s0) * n * (n - 1)
    return lower, upper


def s_m_partial(s0: float, big_n: int, n: int, m: int) -> float:
    """Expected collision mass E[sigma_m] with a fixed corpus of N samples
    plus n fresh samples from the preceding model.

    Generation 1 is estimated from the corpus alone:
    S_1 = 1/N + (1 - 1/N) s0.  For m >= 2, with a = n/(N+n) and
    b = a((1 + 1/N)a - 1/N),

        S_m = [ (1/N)(1 + 2a - (1 - 1/N) a b**(m-1))
                + (1 - 1/N) s0 (1 + a - a b**(m-1) / N) ]
              / (1 + (1 + 1/N) a).
    """
    _check_sigma(s0)
    if big_n < 2:
        raise OutOfRange(f"corpus size must be >= 2, got {big_n}")
    if n < 1:
        raise OutOfRange(f"sample size must be >= 1, got {n}")
    if m < 1:
        raise OutOfRange(f"generation must be >= 1, got {m}")
    inv_n = 1.0 / big_n
    if m == 1:
        return inv_n + (1.0 - inv_n) * s0
    a = n / (big_n + n)
    b = a * ((1.0 + inv_n) * a - inv_n)
    bm = b ** (m - 1)
    numer = inv_n * (1.0 + 2.0 * a - (1.0 - inv_n) * a * bm) + (
        1.0 - inv_n
    ) * s0 * (1.0 + a - a * bm * inv_n)
    return numer / (1.0 + (1.0 + inv_n) * a)


def g_n_branch(s: int, n: int) -> int:
    """Regime of G_n(s): 1 (large s), 2 (middle), or 3 (small s)."""
    if s < 2:
        raise OutOfRange(f"vocabulary size must be >= 2, got {s}")
    if n < 1:
        raise OutOfRange(f"sample size must be >= 1, got {n}")
    if s >= C0 * n / math.e + 2.0:
        return 1
    if s >= C0 * n / 4.0 + 2.0:
        return 2
    return 3


def g_n(s: int, n: int) -> float:
    """Concentration factor G_n(s); +inf when the value overflows float64.

    G_n(s) = C1 s exp(C0 n / (2e))      if C0 n/e + 2 <= s
           = C1 s (C0 n / s)**(s/2)     if C0 n/4 + 2 <= s < C0 n/e + 2
           = 2**s - 2                   if s < C0 n/4 + 2
    """
    branch = g_n_branch(s, n)
    with np.errstate(over="ignore"):
        if branch == 1:
            return float(C1 * s * np.exp(C0 * n / (2.0 * math.e)))
        if branch == 2:
            return float(C1 * s * np.float64(C0 * n / s) ** (s / 2.0))
        return float(np.exp2(np.float64(s)) - 2.0)


@dataclass(frozen=True)
class DeviationBound:
    """An L1-deviation bound; vacuous when above the trivial cap of 2."""

    value: float
    vacuous: bool


def deviation_bound(big_n: int, n: int, s: int) -> DeviationBound:
    """Bound on E || p_m - p_1 ||_1 for m >= 2 under a fixed corpus of N
    samples plus n synthetic samples: (1/N) sqrt(pi n / 2) G_n(s).
    """
    if big_n < 1:
        raise OutOfRange(f"corpus size must be >= 1, got {big_n}")
    value = math.sqrt(math.pi * n / 2.0) / big_n * g_n(s, n)
    return DeviationBound(value=value, vacuous=not value < TRIVIAL_L1_CAP)


# Switch to the series expansion of phi around 1/2 inside this radius.
_PHI_TAYLOR_RADIUS = 1e-6


def phi(x: float) -> float:
    """phi(x) = log((1-x)/x) / (1 - 2x) on [0, 1/2].

    Strictly decreasing, phi(0) = +inf, and phi(1/2) = 2 by continuity; near
    1/2 the removable singularity is evaluated by the quadratic Taylor
    expansion 2 + (8/3)(1/2 - x)**2.
    """
    if not 0.0 <= x <= 0.5:
        raise OutOfRange(f"phi is defined on [0, 1/2], got {x}")
    if x == 0.0:
        return math.inf
    delta = 0.5 - x
    if abs(delta) < _PHI_TAYLOR_RADIUS:
        return 2.0 + (8.0 / 3.0) * delta * delta
    return math.log((1.0 - x) / x) / (1.0 - 2.0 * x)


def concentration_tail(pi_p: float, n: int, s: int, eps: float) -> float:
    """Bound on P(||p_hat - p||_1 >= eps) for the empirical distribution of
    n i.i.d. samples: exp(-n phi(pi_p) eps**2 / 4) G_n(s), clamped to [0,1].

    ``pi_p`` is the best-partition statistic of p (max over subsets A of
    min(p(A), 1-p(A))).  pi_p == 0 means p is a point mass, whose empirical
    distribution never deviates: the bound is 0.
    """
    if eps <= 0.0:
        raise OutOfRange(f"eps must be > 0, got {eps}")
    rate = phi(pi_p)
    if math.isinf(rate):
        return 0.0
    g = g_n(s, n)
    with np.errstate(over="ignore"):
        value = float(np.exp(-n * rate * eps * eps / 4.0) * g)
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class GeneralDeviationBound:
    """Deviation bound driven by an estimated best-partition mass."""

    zeta: float
    value: float
    vacuous: bool


def deviation_bound_general(
    big_n: int, n: int, s: int, e_lambda1: float
) -> GeneralDeviationBound:
    """Bound on E || p_m - p_1 ||_1 for m >= 2 given E[lambda_1], the
    expected best-partition product mass of generation 1:

    zeta = 1/2 - (1/2 - 2 E[lambda_1]) (N/(N+n))**2,
    bound = (1/N) sqrt(n pi / phi(zeta)) G_n(s).

    At E[lambda_1] = 1/4 this reduces to :func:`deviation_bound`.
    """
    if big_n < 1:
        raise OutOfRange(f"corpus size must be >= 1, got {big_n}")
    if not 0.0 <= e_lambda1 <= 0.25:
        raise OutOfRange(f"E[lambda_1] must be in [0, 1/4], got {e_lambda1}")
    ratio = big_n / (big_n + n)
    zeta = 0.5 - (0.5 - 2.0 * e_lambda1) * ratio * ratio
    rate = phi(zeta)
    if math.isinf(rate):
        value = 0.0
    else:
        value = math.sqrt(n * math.pi / rate) / big_n * g_n(s, n)
    return GeneralDeviationBound(
        zeta=zeta, value=value, vacuous=not value < TRIVIAL_L1_CAP
    )


@dataclass(frozen=True)
class MaxSyntheticBudget:
    """Largest synthetic budget n certified for a target deviation.

    ``regime_violation`` is True when the returned n does not satisfy the
    large-s regime C0 n / e + 2 <= s that the certificate assumes.
    """

    n: int
    regime_violation: bool


def max_synthetic_n(s: int, big_n: int, eps: float) -> MaxSyntheticBudget:
    """Largest n with (1/N) sqrt(pi n / 2) G_n(s) <= eps in the large-s
    regime: n <= 2 pi e**-2 min(s - 2, log(sqrt(2) pi N eps / (6 e s))).

    Floored at 0; a budget of 0 means no synthetic data is certified.
    """
    if s < 3:
        raise OutOfRange(f"vocabulary size must be >= 3, got {s}")
    if big_n < 1:
        raise OutOfRange(f"corpus size must be >= 1, got {big_n}")
    if eps <= 0.0:
        raise OutOfRange(f"eps must be > 0, got {eps}")
    arg = math.sqrt(2.0) * math.pi * big_n * eps / (6.0 * math.e * s)
    log_term = math.log(arg) if arg > 0 else -math.inf
    budget = 2.0 * math.pi * math.exp(-2.0) * min(float(s - 2), log_term)
    n = max(0, math.floor(budget))
    violation = not (C0 * n / math.e + 2.0 <= s)
    return MaxSyntheticBudget(n=n, regime_violation=violation)


def prop1_limit_law(p0: ProbVec) -> np.ndarray:
    """Law of the collapse limit under fully synthetic training: the chain
    converges to the point mass at token i with probability p0_i.
    """
    return np.array(p0.probs, dtype=np.float64, copy=True)


@dataclass(frozen=True)
class BoundsReport:
    """Closed-form predictions for one chain configuration.

    Arrays are indexed by generation m = 1..generations.  Fields that do not
    apply to the schedule kind are None.  ``rho_clamped`` records whether
    any rho bound hit its [0, 1] clamp.
    """

    kind: ScheduleKind
    s0: float
    n: int
    corpus_size: Optional[int]
    s: int
    s_tilde: int
    generations: int
    s_m: Optional[np.ndarray]
    rho_lower: Optional[np.ndarray]
    rho_upper: Optional[np.ndarray]
    rho_clamped: bool
    t_lower: Optional[float]
    t_upper: Optional[float]
    g_value: Optional[float]
    g_branch: Optional[int]
    deviation: Optional[DeviationBound]


def make_bounds_report(
    schedule: Schedule,
    p0: ProbVec,
    generations: int,
    s0: Optional[float] = None,
) -> BoundsReport:
    """Assemble every closed form that applies to ``schedule`` for
    generations 1..generations, from the actual initial distribution.
    """
    from .dist_core import sigma as _sigma
    from .dist_core import support_size

    if generations < 1:
        raise OutOfRange(f"generations must be >= 1, got {generations}")
    s = p0.size
    s_tilde = support_size(p0)
    s0_val = _sigma(p0) if s0 is None else s0
    ms = np.arange(1, generations + 1)

    s_m = rho_lo = rho_hi = None
    rho_clamped = False
    t_lo = t_hi = None
    g_val = None
    g_br = None
    dev = None

    if schedule.kind is ScheduleKind.FULLY_SYNTHETIC:
        s_m = np.array([s_m_fully(s0_val, schedule.n, int(m)) for m in ms])
        pairs = [rho_bounds(s0_val, schedule.n, s_tilde, int(m)) for m in ms]
        rho_lo = np.array([a for a, _ in pairs])
        rho_hi = np.array([b for _, b in pairs])
        decay = (1.0 - 1.0 / schedule.n) ** ms.astype(np.float64)
        rho_clamped = bool(
            np.any(1.0 - schedule.n * (1.0 - s0_val) * decay < 0.0)
        )
        t_lo, t_hi = expected_t_bounds(s0_val, schedule.n, s_tilde)
    elif schedule.kind is ScheduleKind.PARTIALLY_SYNTHETIC:
        s_m = np.array(
            [s_m_partial(s0_val, schedule.corpus_size, schedule.n, int(m)) for m in ms]
        )
        g_val = g_n(s, schedule.n)
        g_br = g_n_branch(s, schedule.n)
        dev = deviation_bound(schedule.corpus_size, schedule.n, s)

    return BoundsReport(
        kind=schedule.kind,
        s0=s0_val,
        n=schedule.n,
        corpus_size=schedule.corpus_size,
        s=s,
        s_tilde=s_tilde,
        generations=generations,
        s_m=s_m,
        rho_lower=rho_lo,
        rho_upper=rho_hi,
        rho_clamped=rho_clamped,
        t_lower=t_lo,
        t_upper=t_hi,
        g_value=g_val,
        g_branch=g_br,
        deviation=dev,
    )
