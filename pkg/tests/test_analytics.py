"""Closed forms and bounds: frozen oracles, recursions, regime boundaries."""

from __future__ import annotations

import math

import numpy as np
import pytest

from collapsesim.analytics import (
    C0,
    C1,
    deviation_bound,
    deviation_bound_general,
    expected_t_bounds,
    g_n,
    g_n_branch,
    concentration_tail,
    make_bounds_report,
    max_synthetic_n,
    phi,
    prop1_limit_law,
    rho_bounds,
    s_m_fully,
    s_m_partial,
)
from collapsesim.dist_core import validate
from collapsesim.errors import OutOfRange
from collapsesim.schedules import (
    fully_synthetic,
    most_recent,
    partially_synthetic,
    randomly_sampled,
)

from conftest import make_rng


class TestSmFully:
    def test_collapsed_start_stays_collapsed(self):
        for n, m in ((1, 0), (5, 3), (100, 50)):
            assert s_m_fully(1.0, n, m) == 1.0

    def test_single_sample_collapses_in_one_step(self):
        assert s_m_fully(0.2, 1, 1) == 1.0
        assert s_m_fully(0.2, 1, 7) == 1.0

    def test_hand_value(self):
        assert s_m_fully(0.1, 10, 1) == pytest.approx(0.19, rel=1e-15)

    def test_generation_zero_returns_start(self):
        assert s_m_fully(0.37, 12, 0) == pytest.approx(0.37, rel=1e-15)

    def test_one_step_recursion(self):
        rng = make_rng(101)
        for _ in range(100):
            s0 = float(rng.uniform(1e-6, 1.0))
            n = int(rng.integers(1, 1000))
            m = int(rng.integers(1, 300))
            lhs = s_m_fully(s0, n, m)
            rhs = 1.0 / n + (1.0 - 1.0 / n) * s_m_fully(s0, n, m - 1)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_monotone_to_one(self):
        vals = [s_m_fully(0.05, 20, m) for m in range(0, 400, 20)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(1.0, abs=1e-4)

    def test_range_checks(self):
        with pytest.raises(OutOfRange):
            s_m_fully(0.0, 5, 1)
        with pytest.raises(OutOfRange):
            s_m_fully(1.2, 5, 1)
        with pytest.raises(OutOfRange):
            s_m_fully(0.5, 0, 1)
        with pytest.raises(OutOfRange):
            s_m_fully(0.5, 5, -1)


class TestRhoBounds:
    def test_generation_zero_lower_clamps_to_zero(self):
        lower, _ = rho_bounds(0.3, 10, 5, 0)
        assert lower == 0.0

    def test_limits_reach_one(self):
        lower, upper = rho_bounds(0.1, 10, 52, 5000)
        assert lower == pytest.approx(1.0, abs=1e-12)
        assert upper == pytest.approx(1.0, abs=1e-12)

    def test_ordering_on_grid(self):
        for s0 in (0.05, 0.3, 0.8):
            for n in (2, 10, 100):
                for m in (0, 1, 5, 50, 500):
                    lower, upper = rho_bounds(s0, n, 52, m)
                    assert 0.0 <= lower <= upper <= 1.0

    def test_range_checks(self):
        with pytest.raises(OutOfRange):
            rho_bounds(0.1, 1, 5, 3)
        with pytest.raises(OutOfRange):
            rho_bounds(0.1, 5, 1, 3)


class TestExpectedTBounds:
    def test_collapsed_start(self):
        assert expected_t_bounds(1.0, 10, 52) == (1.0, 1.0)

    def test_single_sample(self):
        assert expected_t_bounds(0.3, 1, 52) == (1.0, 1.0)

    def test_hand_values(self):
        lower, upper = expected_t_bounds(0.1, 100, 52)
        assert lower == pytest.approx(91.84705882352941, rel=1e-14)
        assert upper == 8911.0

    def test_lower_below_upper_on_grid(self):
        for s0 in (0.05, 0.5, 0.99):
            for n in (2, 20, 400):
                lower, upper = expected_t_bounds(s0, n, 52)
                assert 1.0 <= lower <= upper


def s_m_partial_by_recursion(s0: float, big_n: int, n: int, m: int) -> float:
    """Independent evaluation through the exact one-step recursion.

    S_1 = 1/N + (1 - 1/N) S0 and, with a = n/(N+n) and
    b = a((1+1/N)a - 1/N),

        S_m = (1-a)(1+2a)/N + (1-1/N)(1-a^2) S0 + b S_{m-1},   m >= 2.
    """
    inv = 1.0 / big_n
    a = n / (big_n + n)
    b = a * ((1.0 + inv) * a - inv)
    val = inv + (1.0 - inv) * s0
    for _ in range(2, m + 1):
        val = (1.0 - a) * (1.0 + 2.0 * a) * inv + (1.0 - inv) * (
            1.0 - a * a
        ) * s0 + b * val
    return val


class TestSmPartial:
    def test_generation_one_closed_form(self):
        for s0, big_n in ((0.1, 100), (0.5, 7), (0.9, 10**6)):
            expected = 1.0 / big_n + (1.0 - 1.0 / big_n) * s0
            assert s_m_partial(s0, big_n, 3, 1) == pytest.approx(
                expected, rel=1e-15
            )

    def test_small_synthetic_budget_limit(self):
        # With n << N every generation stays at about 1/N + (1-1/N) S0.
        for m in (1, 2, 10, 50):
            val = s_m_partial(0.1, 10**6, 1, m)
            assert val == pytest.approx(0.1, abs=2e-6)

    def test_intermediate_constants(self):
        big_n, n = 100, 10
        a = n / (big_n + n)
        b = a * ((1.0 + 1.0 / big_n) * a - 1.0 / big_n)
        assert a == pytest.approx(1.0 / 11.0, rel=1e-15)
        assert b == pytest.approx(0.007438016528925620, rel=1e-12)

    def test_matches_exact_recursion_within_transient_envelope(self):
        # The two-term closed form and the exact recursion share S_1 and the
        # fixed point; in between they differ by a transient bounded by
        # b**(m-1) * S0 / N.
        for big_n in (5, 20, 100, 1000):
            for n in (1, 3, 10, 100, 1000):
                for s0 in (0.05, 0.3, 0.9):
                    a = n / (big_n + n)
                    b = a * ((1.0 + 1.0 / big_n) * a - 1.0 / big_n)
                    for m in (1, 2, 3, 5, 10, 40):
                        closed = s_m_partial(s0, big_n, n, m)
                        rec = s_m_partial_by_recursion(s0, big_n, n, m)
                        envelope = abs(b) ** (m - 1) * s0 / big_n + 1e-12
                        assert abs(closed - rec) <= envelope, (
                            big_n, n, s0, m
                        )

    def test_first_generations_agree_exactly(self):
        for big_n, n, s0 in ((100, 10, 0.1), (50, 25, 0.6)):
            assert s_m_partial(s0, big_n, n, 1) == pytest.approx(
                s_m_partial_by_recursion(s0, big_n, n, 1), rel=1e-15
            )

    def test_fixed_points_agree(self):
        for big_n, n, s0 in ((100, 10, 0.1), (20, 100, 0.4), (1000, 3, 0.8)):
            inv = 1.0 / big_n
            a = n / (big_n + n)
            b = a * ((1.0 + inv) * a - inv)
            closed_inf = (
                inv * (1.0 + 2.0 * a) + (1.0 - inv) * s0 * (1.0 + a)
            ) / (1.0 + (1.0 + inv) * a)
            rec_inf = (
                (1.0 - a) * (1.0 + 2.0 * a) * inv
                + (1.0 - inv) * (1.0 - a * a) * s0
            ) / (1.0 - b)
            assert closed_inf == pytest.approx(rec_inf, rel=1e-12)
            assert s_m_partial(s0, big_n, n, 4000) == pytest.approx(
                closed_inf, rel=1e-12
            )

    def test_range_checks(self):
        with pytest.raises(OutOfRange):
            s_m_partial(0.1, 1, 5, 2)
        with pytest.raises(OutOfRange):
            s_m_partial(0.1, 100, 0, 2)
        with pytest.raises(OutOfRange):
            s_m_partial(0.1, 100, 5, 0)


class TestGn:
    def test_small_vocabulary_value(self):
        assert g_n_branch(2, 10) == 3
        assert g_n(2, 10) == 2.0

    def test_large_vocabulary_value(self):
        assert g_n_branch(600, 5) == 1
        assert g_n(600, 5) == pytest.approx(33243.226232216278, rel=1e-12)

    def test_middle_regime_value(self):
        assert g_n_branch(10, 10) == 2
        assert g_n(10, 10) == pytest.approx(9777.7473227573295, rel=1e-12)

    def test_branch_thresholds(self):
        n = 100
        hi = C0 * n / math.e + 2.0
        lo = C0 * n / 4.0 + 2.0
        assert g_n_branch(math.ceil(hi), n) == 1
        assert g_n_branch(math.floor(hi), n) == 2
        assert g_n_branch(math.ceil(lo), n) == 2
        assert g_n_branch(math.floor(lo), n) == 3

    def test_overflow_reported_as_inf(self):
        assert math.isinf(g_n(1100, 100_000))

    def test_branch_formulas_tangent_at_unshifted_boundary(self):
        # At s = C0 n / e the two branch expressions coincide exactly:
        # (C0 n / s)**(s/2) = e**(s/2) = e**(C0 n / (2 e)).  Compared in log
        # space so large n does not overflow; a log-space gap is a relative
        # gap for values this close.
        for n in (5, 50, 500, 5000):
            s_star = C0 * n / math.e
            log_f1 = math.log(C1 * s_star) + C0 * n / (2.0 * math.e)
            log_f2 = math.log(C1 * s_star) + (s_star / 2.0) * math.log(
                C0 * n / s_star
            )
            assert abs(log_f1 - log_f2) <= 1e-9

    def test_branch_gap_at_shifted_boundary_is_order_one_over_s(self):
        # The regime split happens 2 tokens above the tangency point, so the
        # two formulas differ there by a relative factor of about 2/s.
        for n in (50, 500, 5000):
            s_b = math.ceil(C0 * n / math.e + 2.0)
            log_f1 = C0 * n / (2.0 * math.e)
            log_f2 = (s_b / 2.0) * math.log(C0 * n / s_b)
            assert abs(log_f1 - log_f2) <= 5.0 / s_b

    def test_range_checks(self):
        with pytest.raises(OutOfRange):
            g_n(1, 10)
        with pytest.raises(OutOfRange):
            g_n(10, 0)


class TestDeviationBound:
    def test_frozen_value(self):
        dev = deviation_bound(10**6, 5, 600)
        assert dev.value == pytest.approx(0.09316399551815072, rel=1e-12)
        assert not dev.vacuous

    def test_scales_inversely_with_corpus(self):
        a = deviation_bound(10**6, 5, 600).value
        b = deviation_bound(2 * 10**6, 5, 600).value
        assert a == pytest.approx(2.0 * b, rel=1e-12)

    def test_vacuous_flagged(self):
        dev = deviation_bound(100, 1000, 600)
        assert dev.vacuous
        assert dev.value > 2.0

    def test_range_check(self):
        with pytest.raises(OutOfRange):
            deviation_bound(0, 5, 600)


class TestPhi:
    def test_continuity_value_at_half(self):
        assert phi(0.5) == 2.0

    def test_hand_value(self):
        assert phi(0.25) == pytest.approx(2.0 * math.log(3.0), rel=1e-14)

    def test_strictly_decreasing(self):
        assert phi(0.1) > phi(0.3) > phi(0.5)
        grid = np.linspace(1e-4, 0.5, 500)
        vals = [phi(float(x)) for x in grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_at_least_two_on_grid(self):
        for x in np.linspace(1e-9, 0.5, 10_000):
            assert phi(float(x)) >= 2.0

    def test_zero_maps_to_infinity(self):
        assert math.isinf(phi(0.0))

    def test_stable_near_half(self):
        for delta in (0.9e-6, 1e-7, 1e-9, 1e-12):
            x = 0.5 - delta
            series = 2.0 + (8.0 / 3.0) * delta * delta
            assert abs(phi(x) - series) <= 1e-9

    def test_continuous_across_series_switch(self):
        # Either side of the series-switch radius stays within the 1e-9
        # stability envelope of the limit value, so the jump across the
        # switch is bounded by twice that.
        a = phi(0.5 - 1.0000001e-6)
        b = phi(0.5 - 0.9999999e-6)
        assert abs(a - 2.0) <= 1e-9
        assert abs(b - 2.0) <= 1e-9
        assert abs(a - b) <= 2e-9

    def test_range_checks(self):
        with pytest.raises(OutOfRange):
            phi(-0.1)
        with pytest.raises(OutOfRange):
            phi(0.6)


class TestConcentrationTail:
    def test_frozen_example(self):
        # s=2, p=(1/2,1/2): G = 2**2 - 2 = 2, phi(1/2) = 2, so the bound is
        # 2 exp(-100 * 2 * 0.25 / 4) = 2 exp(-12.5).
        got = concentration_tail(0.5, 100, 2, 0.5)
        assert got == pytest.approx(2.0 * math.exp(-12.5), rel=1e-12)

    def test_monte_carlo_tail_below_bound(self):
        bound = concentration_tail(0.5, 100, 2, 0.5)
        counts = make_rng(55).binomial(100, 0.5, size=1_000_000)
        # ||phat - p||_1 = 2|c/100 - 1/2| >= 0.5 iff |c - 50| >= 25.
        frac = float(np.mean(np.abs(counts - 50) >= 25))
        assert frac <= bound

    def test_tiny_eps_degrades_to_cap(self):
        assert concentration_tail(0.5, 100, 2, 1e-12) == 1.0

    def test_point_mass_never_deviates(self):
        assert concentration_tail(0.0, 100, 5, 0.3) == 0.0

    def test_monotone_in_partition_mass(self):
        lo = concentration_tail(0.1, 50, 4, 0.4)
        hi = concentration_tail(0.5, 50, 4, 0.4)
        assert hi > lo

    def test_range_check(self):
        with pytest.raises(OutOfRange):
            concentration_tail(0.5, 100, 2, 0.0)


class TestDeviationBoundGeneral:
    def test_worst_case_reduces_to_special_bound(self):
        for big_n, n, s in ((10**6, 5, 600), (1000, 50, 100)):
            general = deviation_bound_general(big_n, n, s, 0.25)
            special = deviation_bound(big_n, n, s)
            assert general.zeta == pytest.approx(0.5, abs=1e-15)
            assert general.value == pytest.approx(special.value, rel=1e-12)

    def test_dirac_generation_one_shrinks_bound(self):
        big_n, n, s = 10**6, 5, 600
        worst = deviation_bound_general(big_n, n, s, 0.25)
        best = deviation_bound_general(big_n, n, s, 0.0)
        ratio = big_n / (big_n + n)
        assert best.zeta == pytest.approx(0.5 - 0.5 * ratio**2, rel=1e-12)
        assert best.value < worst.value

    def test_monotone_in_lambda(self):
        vals = [
            deviation_bound_general(10**6, 5, 600, lam).value
            for lam in (0.0, 0.1, 0.2, 0.25)
        ]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_range_checks(self):
        with pytest.raises(OutOfRange):
            deviation_bound_general(10, 5, 600, 0.3)
        with pytest.raises(OutOfRange):
            deviation_bound_general(0, 5, 600, 0.1)


class TestMaxSyntheticN:
    def test_frozen_value(self):
        got = max_synthetic_n(600, 10**9, 0.1)
        assert got.n == 9
        assert not got.regime_violation
        # The certified budget must actually satisfy the target deviation.
        assert deviation_bound(10**9, 9, 600).value <= 0.1

    def test_zero_budget_when_log_arm_nonpositive(self):
        got = max_synthetic_n(600, 10, 1e-6)
        assert got.n == 0

    def test_monotone_in_corpus_until_vocabulary_arm_binds(self):
        budgets = [max_synthetic_n(5, 10**k, 0.1).n for k in range(1, 14)]
        assert all(b >= a for a, b in zip(budgets, budgets[1:]))
        cap = math.floor(2.0 * math.pi * math.exp(-2.0) * 3)
        assert budgets[-1] == cap

    def test_certified_budget_always_inside_regime(self):
        # floor(2 pi e^-2 min(s-2, L)) <= (e / C0)(s - 2), so the returned
        # budget can never leave the large-vocabulary regime.
        for s in (3, 10, 100, 600):
            for big_n in (10, 10**4, 10**9):
                for eps in (1e-3, 0.1, 10.0):
                    got = max_synthetic_n(s, big_n, eps)
                    assert not got.regime_violation
                    assert C0 * got.n / math.e + 2.0 <= s

    def test_range_checks(self):
        with pytest.raises(OutOfRange):
            max_synthetic_n(2, 100, 0.1)
        with pytest.raises(OutOfRange):
            max_synthetic_n(10, 0, 0.1)
        with pytest.raises(OutOfRange):
            max_synthetic_n(10, 100, 0.0)


class TestProp1LimitLaw:
    def test_returns_initial_distribution(self):
        p0 = validate([0.5, 0.3, 0.2])
        assert np.array_equal(prop1_limit_law(p0), [0.5, 0.3, 0.2])

    def test_returns_independent_copy(self):
        p0 = validate([0.25, 0.75])
        law = prop1_limit_law(p0)
        law[0] = 0.0
        assert p0.probs[0] == 0.25


class TestMakeBoundsReport:
    def setup_method(self):
        self.p0 = validate([0.5, 0.3, 0.2])

    def test_fully_synthetic_fields(self):
        report = make_bounds_report(fully_synthetic(20), self.p0, 5)
        assert report.s0 == pytest.approx(0.38, abs=1e-15)
        assert report.s_tilde == 3
        assert report.s == 3
        expected = [s_m_fully(report.s0, 20, m) for m in range(1, 6)]
        assert np.allclose(report.s_m, expected, rtol=1e-15)
        lo, hi = rho_bounds(report.s0, 20, 3, 3)
        assert report.rho_lower[2] == lo
        assert report.rho_upper[2] == hi
        assert report.rho_clamped  # 20 * 0.62 > 1 drives the raw lower < 0
        assert (report.t_lower, report.t_upper) == expected_t_bounds(
            report.s0, 20, 3
        )
        assert report.g_value is None
        assert report.deviation is None

    def test_rho_clamp_flag_off_when_lower_positive(self):
        p0 = validate([0.9486832980505138, 0.05131670194948623])
        report = make_bounds_report(fully_synthetic(2), p0, 3)
        assert not report.rho_clamped

    def test_partially_synthetic_fields(self):
        report = make_bounds_report(
            partially_synthetic(10, 100), self.p0, 4
        )
        expected = [s_m_partial(report.s0, 100, 10, m) for m in range(1, 5)]
        assert np.allclose(report.s_m, expected, rtol=1e-15)
        assert report.g_value == g_n(3, 10)
        assert report.g_branch == g_n_branch(3, 10)
        assert report.deviation == deviation_bound(100, 10, 3)
        assert report.rho_lower is None
        assert report.t_lower is None

    def test_window_kinds_have_no_closed_forms(self):
        for sched in (most_recent(10, 4), randomly_sampled(10)):
            report = make_bounds_report(sched, self.p0, 4)
            assert report.s_m is None
            assert report.rho_lower is None
            assert report.t_lower is None
            assert report.g_value is None
            assert report.deviation is None
            assert report.generations == 4

    def test_sigma_override(self):
        report = make_bounds_report(fully_synthetic(20), self.p0, 2, s0=0.5)
        assert report.s0 == 0.5
        assert report.s_m[0] == pytest.approx(s_m_fully(0.5, 20, 1), rel=1e-15)

    def test_rejects_zero_generations(self):
        with pytest.raises(OutOfRange):
            make_bounds_report(fully_synthetic(5), self.p0, 0)
