import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecca import numerics as nm
from treecca.errors import InternalConsistencyError, ParameterError


def exact_cdf_fraction(n, p: Fraction, k):
    """Independent oracle: direct rational summation."""
    total = Fraction(0)
    for i in range(0, min(k, n) + 1):
        total += Fraction(math.comb(n, i)) * p**i * (1 - p) ** (n - i)
    return total


class TestBinomial:
    @pytest.mark.parametrize("n,p,k,expect", [
        (2, Fraction(1, 3), 1, Fraction(8, 9)),
        (3, Fraction(2, 3), 2, Fraction(19, 27)),
        (2, Fraction(1, 27), 1, Fraction(728, 729)),
        (5, Fraction(7, 8), 3, None),
        (40, Fraction(1, 5), 10, None),
    ])
    def test_cdf_against_fraction_oracle(self, n, p, k, expect):
        want = exact_cdf_fraction(n, p, k)
        if expect is not None:
            assert want == expect
        got = nm.binom_cdf(n, float(p), k)
        # the oracle sees the rational p; the implementation its float image
        want_float = exact_cdf_fraction(n, Fraction(float(p)), k)
        assert got == pytest.approx(float(want_float), rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(0, 60), num=st.integers(0, 32), den=st.just(32),
           k=st.integers(-2, 62))
    def test_cdf_tail_fraction_property(self, n, num, den, k):
        p = Fraction(num, den)
        want_cdf = exact_cdf_fraction(n, p, k)
        want_tail = 1 - exact_cdf_fraction(n, p, k - 1)
        assert nm.binom_cdf(n, float(p), k) == pytest.approx(
            float(want_cdf), rel=1e-12, abs=1e-300)
        assert nm.binom_tail(n, float(p), k) == pytest.approx(
            float(want_tail), rel=1e-12, abs=1e-300)

    def test_edge_cases(self):
        assert nm.binom_cdf(7, 0.0, 0) == 1.0
        assert nm.binom_tail(4, 0.5, 5) == 0.0
        assert nm.binom_tail(4, 0.5, 0) == 1.0
        assert nm.binom_cdf(4, 1.0, 3) == 0.0
        assert nm.binom_pmf(4, 0.0, 0) == 1.0
        with pytest.raises(ParameterError):
            nm.binom_cdf(3, 1.5, 1)
        with pytest.raises(ParameterError):
            nm.binom_cdf(-1, 0.5, 0)

    @pytest.mark.parametrize("n,p", [(10, 0.5), (100, 0.05), (1000, 0.9),
                                     (10000, 0.001), (10000, 0.9)])
    def test_complement_identity(self, n, p):
        for k in [0, 1, n // 3, n // 2, n - 1]:
            s = nm.binom_cdf(n, p, k) + nm.binom_tail(n, p, k + 1)
            assert abs(s - 1.0) <= 1e-12

    def test_cdf_monotone_in_k_and_p(self):
        n = 200
        for p in (0.05, 0.37, 0.66, 0.95):
            vals = [nm.binom_cdf(n, p, k) for k in range(0, n + 1, 7)]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        for k in (3, 50, 150):
            vals = [nm.binom_cdf(n, p, k) for p in np.linspace(0, 1, 21)]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestFailureMaps:
    def test_b1_at_one_is_one_exactly(self):
        for d, theta, kappa in [(3, 2, 3), (10, 7, 5), (87, 2, 3)]:
            assert nm.b1(1.0, d, theta, kappa) == 1.0
            assert nm.b2(1.0, d, theta, kappa) == 1.0

    def test_b1_b2_instances(self):
        assert nm.b1(0.0, 3, 2, 3) == pytest.approx(19 / 27, rel=1e-12)
        assert nm.b2(0.0, 2, 2, 3) == pytest.approx(8 / 9, rel=1e-12)

    def test_paper_regime_values(self):
        assert nm.b1(1e-4, 100, 100, 3) <= 1e-4
        assert nm.b2(87**-2, 87, 2, 3) <= 87**-2

    def test_monotone_in_x(self):
        for fn, params in [(nm.b1, (7, 3, 4)), (nm.b2, (7, 3, 4)),
                           (nm.b_strong, (7, 3, 4))]:
            vals = [fn(x, *params) for x in np.linspace(0, 1, 30)]
            assert all(b >= a - 1e-13 for a, b in zip(vals, vals[1:]))

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            nm.b1(0.5, 2, 3, 3)  # theta > d
        with pytest.raises(ParameterError):
            nm.b2(1.5, 3, 2, 3)
        with pytest.raises(ParameterError):
            nm.b1(0.5, 3, 2, 2)

    def test_b2_deriv_instance(self):
        assert nm.b2_deriv(0.0, 2, 2, 3) == pytest.approx(2 / 9, rel=1e-12)

    def test_b1_deriv_at_one_zero_unless_degenerate(self):
        assert nm.b1_deriv(1.0, 5, 3, 4) == 0.0

    @pytest.mark.parametrize("fn,deriv", [(nm.b1, nm.b1_deriv),
                                          (nm.b2, nm.b2_deriv)])
    def test_derivative_matches_finite_difference(self, fn, deriv):
        h = 1e-6
        for (d, theta, kappa) in [(5, 3, 8), (9, 4, 5), (12, 2, 3)]:
            for x in (0.1, 0.3, 0.62, 0.9):
                want = (fn(x + h, d, theta, kappa)
                        - fn(x - h, d, theta, kappa)) / (2 * h)
                got = deriv(x, d, theta, kappa)
                if abs(got) > 1e-8:
                    assert got == pytest.approx(want, rel=1e-5)


class TestKleene:
    def test_hand_iterates_d2(self):
        ys = nm.kleene_sequence("b2", 2, 2, 3, 2)
        assert ys[0] == 0.0
        assert ys[1] == pytest.approx(8 / 9, rel=1e-12)
        assert ys[2] == pytest.approx(728 / 729, rel=1e-12)

    def test_d2_classified_numerically_one(self):
        r = nm.kleene_fp("b2", 2, 2, 3)
        assert r.classification == nm.NUMERICALLY_ONE
        assert r.certificate is None

    def test_fluctuation_regime_below_one(self):
        r = nm.kleene_fp("b2", 87, 2, 3)
        assert r.classification == nm.BELOW_ONE
        assert r.y_star <= 87**-2

    def test_fixation_regime_below_one(self):
        r = nm.kleene_fp("b1", 100, 100, 3)
        assert r.classification == nm.BELOW_ONE
        assert r.y_star <= 1e-4

    def test_certificate_bounds_limit(self):
        for map_id, d, theta, kappa in [("b2", 87, 2, 3), ("b1", 100, 100, 3),
                                        ("b2", 40, 2, 3)]:
            r = nm.kleene_fp(map_id, d, theta, kappa)
            if r.certificate is not None:
                assert r.y_star <= r.certificate + r.tol

    def test_iterates_monotone(self):
        ys = nm.kleene_sequence("b1", 8, 3, 5, 40)
        assert np.all(np.diff(ys) >= -1e-12)

    def test_validation(self):
        with pytest.raises(ParameterError):
            nm.kleene_fp("b3", 3, 2, 3)
        with pytest.raises(ParameterError):
            nm.kleene_fp("b1", 3, 2, 3, tol=0.0)


class TestClosedFormBounds:
    def test_chernoff_at_zero_delta(self):
        assert nm.chernoff_lower_tail(3.7, 0.0) == 1.0

    def test_markov_instance(self):
        assert nm.markov_binom_tail(1.0, 1) == pytest.approx(math.e, rel=1e-12)

    def test_markov_vs_exact_tail(self):
        # both sides recomputed: the exact tail is 56/1024, the closed form
        # (5e/8)^8 ~ 69.4; only exact <= bound is asserted
        exact = nm.binom_tail(10, 0.5, 8)
        assert exact == pytest.approx(56 / 1024, rel=1e-12)
        bound = nm.markov_binom_tail(5.0, 8)
        assert bound == pytest.approx((5 * math.e / 8) ** 8, rel=1e-12)
        assert exact <= bound

    def test_domain_validation(self):
        with pytest.raises(ParameterError):
            nm.chernoff_lower_tail(1.0, 1.5)
        with pytest.raises(ParameterError):
            nm.markov_binom_tail(1.0, 0.5)


class TestConditions:
    def test_fluctuation_threshold_at_87(self):
        assert bool(nm.cond_fluctuation(87, 2, 3))
        assert not bool(nm.cond_fluctuation(86, 2, 3))

    def test_fixation_instances(self):
        assert bool(nm.cond_fixation(100, 100, 3))
        for kappa in (3, 10, 100, 10**6):
            assert not bool(nm.cond_fixation(3, 2, kappa))

    def test_small_theta_conditions(self):
        assert bool(nm.cond_cca_small_theta(10, 3, 2447))
        assert not bool(nm.cond_cca_small_theta(10, 3, 2446))
        assert bool(nm.cond_cca_small_theta(3, 2, 324))
        assert not bool(nm.cond_cca_small_theta(3, 2, 323))

    def test_boundary_flag(self):
        # kappa = 12 d^3 exactly: inside the guard band
        chk = nm.cond_cca_small_theta(3, 2, 324)
        assert chk.passes and chk.boundary

    def test_ghm_condition_tower_exponent(self):
        # huge kappa ln theta must not overflow: exponent collapses to 1
        chk = nm.cond_ghm_small_theta(4, 2, 10**5)
        assert chk.passes
        # the raw inequality is strictly stronger than e at kappa=3, so it
        # fails at theta=d=2 (that case is certified by the exact-count route)
        assert not bool(nm.cond_ghm_small_theta(2, 2, 3))

    def test_validation(self):
        with pytest.raises(ParameterError):
            nm.cond_fixation(1, 2, 3)
        with pytest.raises(ParameterError):
            nm.cond_fixation(3, 1, 3)


class TestKappaThreshold:
    def test_table_rows(self):
        assert [nm.ghm_kappa_threshold(2, d, nm.THETA2)
                for d in range(2, 10)] == [3, 5, 7, 8, 10, 11, 12, 14]
        assert [nm.ghm_kappa_threshold(3, d, nm.THETA3)
                for d in range(2, 10)] == [3, 3, 3, 4, 5, 5, 6, 7]

    def test_theta_at_least_d_shortcut(self):
        assert nm.ghm_kappa_threshold(5, 5) == 3
        assert nm.ghm_kappa_threshold(7, 4) == 3

    def test_general_route(self):
        k = nm.ghm_kappa_threshold(2, 5, nm.GENERAL)
        assert k >= 3
        assert bool(nm.cond_ghm_small_theta(5, 2, k))
        assert not bool(nm.cond_ghm_small_theta(5, 2, k - 1))

    def test_refinement_validation(self):
        with pytest.raises(ParameterError):
            nm.ghm_kappa_threshold(3, 5, nm.THETA2)
        with pytest.raises(ParameterError):
            nm.ghm_kappa_threshold(2, 5, "other")


class TestSubtreeCountAndBounds:
    def test_theta_equals_d(self):
        for t in (1, 2, 5):
            assert nm.subtree_count(4, 4, t).value == 5

    def test_log_form_for_huge_counts(self):
        r = nm.subtree_count(20, 2, 12)
        assert r.value is None
        assert r.log > 300 * math.log(10)

    def test_union_bound_t1(self):
        got = nm.excitation_union_bound(5, 2, 8, 1)
        assert math.exp(got) == pytest.approx(15 / 512, rel=1e-12)
        # t=1 in general: C(d+1, theta) / kappa^(theta+1)
        got = nm.excitation_union_bound(7, 3, 5, 1)
        assert math.exp(got) == pytest.approx(math.comb(8, 3) / 5**4, rel=1e-12)

    def test_union_bound_hand_instance(self):
        got = nm.excitation_union_bound(2, 2, 3, 2)
        assert math.exp(got) == pytest.approx(2 / 729, rel=1e-12)

    def test_union_bound_theta_d_plus_one(self):
        got = nm.excitation_union_bound(2, 3, 4, 1)
        assert math.exp(got) == pytest.approx(4.0**-4, rel=1e-12)

    def test_relaxed_form_matches_substituted_terms(self):
        # substituting C(d,theta) <= (de/theta)^theta and the enlarged
        # subtree exponent into the exact union bound must reproduce the
        # closed relaxed form, for t >= kappa
        for d, theta, kappa, t in [(6, 2, 3, 4), (9, 3, 4, 5), (5, 2, 3, 3)]:
            terms = [math.log(math.comb(d + 1, theta)),
                     (float(theta)**(t + 1) / (theta - 1))
                     * math.log(d * math.e / theta),
                     -(float(theta)**t + float(theta)**(t - 1)) * math.log(kappa)]
            for m in range(1, kappa - 1):
                if t - 1 - m < 0:
                    break
                terms.append(float(theta)**(t - 1 - m)
                             * (math.log(m + 1) - math.log(kappa)))
            want = math.fsum(terms)
            got = nm.excitation_union_bound_relaxed(d, theta, kappa, t)
            assert got == pytest.approx(want, rel=1e-12)
            assert nm.excitation_union_bound(d, theta, kappa, t) <= got + 1e-9

    def test_tail_bounds(self):
        assert nm.fixation_tail_bound(2, 3) == pytest.approx(1 / 9, rel=1e-12)
        assert nm.fixation_tail_bound(0, 5) == 1.0
        # vacuous regime clamps to 1
        assert nm.ghm_tail_bound(3, 5, 2, 3) == 1.0
        val = nm.ghm_tail_bound(8, 5, 2, 3)
        assert val == pytest.approx(2 * math.comb(6, 2) * math.exp(-(2.0**6)),
                                    rel=1e-12)
        with pytest.raises(ParameterError):
            nm.ghm_tail_bound(2, 5, 2, 3)


class TestProductBound:
    def test_kappa3_theta2_hand_value(self):
        r = nm.product_bound_check(2, 3)
        assert r.lhs_log == pytest.approx(math.log(2) / 7, rel=1e-12)
        assert r.rhs == pytest.approx(3 / 4)
        assert r.passes

    def test_theta3_rhs(self):
        r = nm.product_bound_check(3, 5)
        assert r.rhs == pytest.approx(5 / 24)
        assert r.passes

    def test_sweep(self):
        assert all(nm.product_bound_check(theta, kappa).passes
                   for theta in (2, 3) for kappa in range(3, 51))


class TestPhaseGrid:
    def test_single_cell_equals_direct(self):
        g = nm.phase_grid("b2", 2, [10], [4])
        direct = nm.kleene_fp("b2", 10, 2, 4).y_star
        assert g.y_star[0, 0] == direct

    def test_b1_entries_non_increasing_in_kappa(self):
        g = nm.phase_grid("b1", 3, [6, 8], range(3, 12))
        assert np.all(np.diff(g.y_star, axis=1) <= 1e-9)

    def test_b2_entries_non_decreasing_in_kappa(self):
        g = nm.phase_grid("b2", 2, [8, 12], range(3, 12))
        assert np.all(np.diff(g.y_star, axis=1) >= -1e-9)

    def test_empty_range_rejected(self):
        with pytest.raises(ParameterError):
            nm.phase_grid("b1", 3, [], [3])


def test_aux_sqrt_lnd_inequality_holds_on_range():
    holds, bad = nm.sqrt_lnd_inequality_range(3, 10_000)
    assert holds and bad == []


def test_root_failure_probability_kinds():
    # dary: plain iterate; regular: one wider layer composed on top
    y3 = nm.kleene_sequence("b2", 4, 2, 3, 3)[3]
    assert nm.root_failure_probability("rainbow", "dary-ball", 4, 2, 3, 3) == y3
    reg = nm.root_failure_probability("rainbow", "regular-ball", 4, 2, 3, 3)
    y2 = nm.kleene_sequence("b2", 4, 2, 3, 2)[2]
    assert reg == pytest.approx(nm.binom_cdf(5, (1 - y2) / 3, 1), rel=1e-12)
    assert reg <= y3 + 1e-12  # the wider root can only help
    assert nm.root_failure_probability("rainbow", "regular-ball", 4, 2, 3, 0) == 0.0
