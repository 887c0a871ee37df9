import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fplab.exact import (
    closed_form_even,
    closed_form_naive,
    closed_form_odd,
    eval_ell,
    eval_h,
    expect_win_rate,
    expected_hitting_time,
    f_sequence,
    g_sequence,
    moment_inv_n,
    moment_inv_n_sq,
    moment_report,
    var_win_rate,
)
from fplab.oracle import convolve_power, single_step_pmf, truncated_moment
from fplab.walk import BiasParams

HALF = BiasParams("1/2")
P34 = BiasParams("3/4")


class TestIntegrands:
    @pytest.mark.parametrize("p, u, expected", [("1/2", 0.0, 1.0), ("1/2", 1.0, 0.0), ("3/4", 1.0, 0.5)])
    def test_h_values(self, p, u, expected):
        assert eval_h(BiasParams(p), u) == expected

    def test_h_decreasing(self):
        u = np.linspace(0, 1, 201)
        for p in ("1/2", "0.6", "0.9"):
            assert np.all(np.diff(eval_h(BiasParams(p), u)) < 0)

    def test_h_at_one_is_drift(self):
        for p in ("0.55", "0.7", "0.99"):
            b = BiasParams(p)
            assert eval_h(b, 1.0) == pytest.approx(b.drift, abs=1e-15)

    def test_ell_values(self):
        assert eval_ell(P34, 1.0) == 0.0
        assert eval_ell(HALF, 1.0) == 0.0
        # mpmath: ln(3/4 * sqrt 2)
        assert eval_ell(HALF, 1 / math.sqrt(2)) == pytest.approx(0.0588915178281917272, abs=1e-15)

    def test_ell_blows_up_at_zero(self):
        assert eval_ell(P34, 1e-300) > 690
        with pytest.raises(ValueError):
            eval_ell(P34, 0.0)


class TestMoments:
    def test_inv_n_fair_d1(self):
        value, err = moment_inv_n(HALF, 1)
        assert err <= 1e-12
        assert abs(value - (math.pi / 2 - 1)) <= 1e-15

    def test_inv_n_fair_d2(self):
        value, _ = moment_inv_n(HALF, 2)
        assert abs(value - (math.log(2) - 0.5)) <= 1e-15

    def test_inv_n_sq_fair_d1_against_pmf(self):
        # Truncated pmf, n_max = 2e6: 0.517996718356892 with bound 5.2e-11.
        value, err = moment_inv_n_sq(HALF, 1)
        assert err <= 1e-12
        assert abs(value - 0.517996718356892) <= 1e-6
        assert abs(value - 0.517996718356892) <= 6e-11

    def test_inv_n_sq_p09_d2_against_pmf(self):
        table = convolve_power(single_step_pmf(BiasParams("0.9"), 10**4), 2)
        oracle, bound = truncated_moment(table, -2)
        value, _ = moment_inv_n_sq(BiasParams("0.9"), 2)
        assert abs(value - oracle) <= 1e-8
        assert abs(value - oracle) <= bound + 1e-12

    @pytest.mark.parametrize("d", [1, 2, 5, 17])
    def test_limits_as_p_to_one(self, d):
        q = 1e-7
        params = BiasParams(1 - q)
        e1, _ = moment_inv_n(params, d)
        e2, _ = moment_inv_n_sq(params, d)
        assert abs(e1 - 1 / d) <= 10 * q
        assert abs(e2 - 1 / d**2) <= 10 * q
        assert moment_inv_n(BiasParams(1), d) == (1 / d, 0.0)

    def test_relation_between_reports(self):
        for p in ("1/2", "0.6", "0.9"):
            for d in (1, 2, 9, 30):
                rep = moment_report(BiasParams(p), d)
                assert rep.mean_win_rate == pytest.approx(0.5 + 0.5 * d * rep.e_inv_n, abs=2e-16)
                assert rep.var_win_rate >= 0
                assert 0 < rep.e_inv_n <= 1
                assert 0 < rep.e_inv_n_sq <= rep.e_inv_n
                assert 0.5 < rep.mean_win_rate <= 1
                assert rep.abs_error_estimate < 1e-9

    def test_report_methods(self):
        reps = [moment_report(P34, 7, method=m) for m in ("quadrature", "closed_form", "recursion")]
        assert {r.method for r in reps} == {"quadrature", "closed_form", "recursion"}
        for r in reps[1:]:
            assert abs(r.mean_win_rate - reps[0].mean_win_rate) <= 1e-13
            assert r.var_win_rate == pytest.approx(reps[0].var_win_rate, abs=1e-13)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            expect_win_rate(P34, 3, method="guess")


class TestExpectation:
    @pytest.mark.parametrize(
        "d, expected",
        [(1, math.pi / 4), (2, math.log(2)), (3, 3 * (1 - math.pi / 4))],
    )
    def test_fair_coin_values(self, d, expected):
        for method in ("quadrature", "closed_form", "recursion"):
            assert abs(expect_win_rate(HALF, d, method=method) - expected) <= 1e-12

    def test_p34_d1(self):
        expected = math.sqrt(3) * math.pi / 6
        assert abs(expect_win_rate(P34, 1) - expected) <= 1e-14
        assert abs(closed_form_odd(P34, 1) - expected) <= 1e-15

    def test_certain_coin(self):
        for method in ("quadrature", "closed_form", "recursion"):
            assert expect_win_rate(BiasParams(1), 9, method=method) == 1.0

    def test_cross_method_grid(self):
        for p in ("1/2", "0.6", "3/4", "0.9", "0.99"):
            b = BiasParams(p)
            for d in range(1, 41, 3):
                q = expect_win_rate(b, d)
                assert abs(q - expect_win_rate(b, d, "closed_form")) <= 1e-10
                assert abs(q - expect_win_rate(b, d, "recursion")) <= 1e-10

    def test_decreasing_in_d(self):
        for p in ("1/2", "0.7", "0.95"):
            values = [expect_win_rate(BiasParams(p), d, "recursion") for d in range(1, 61)]
            assert all(a > b for a, b in zip(values, values[1:]))

    def test_increasing_in_p(self):
        for d in (1, 4, 11):
            values = [expect_win_rate(BiasParams(f"{50 + i}/100"), d, "recursion") for i in range(50)]
            assert all(a < b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("p", ["0.6", "3/4", "0.9"])
    def test_large_d_envelope(self, p):
        b = BiasParams(p)
        for d in (100, 250, 1000):
            assert abs(expect_win_rate(b, d) - b.p) <= 3 * b.p * b.q / d


class TestVariance:
    def test_not_monotone_at_p09(self):
        b = BiasParams("9/10")
        v1, v2, v3 = (var_win_rate(b, d) for d in (1, 2, 3))
        assert v1 < v2 and v2 > v3

    def test_vanishes_as_p_to_one(self):
        for d in (1, 3, 10):
            assert var_win_rate(BiasParams(1 - 1e-7), d) < 1e-6
            assert var_win_rate(BiasParams(1), d) == 0.0

    def test_shrinks_with_d(self):
        for p in ("0.6", "3/4"):
            assert var_win_rate(BiasParams(p), 1001) <= var_win_rate(BiasParams(p), 101) / 2

    def test_fair_d1_against_pmf(self):
        e1, e2 = math.pi / 2 - 1, 0.517996718356892
        assert abs(var_win_rate(HALF, 1) - 0.25 * (e2 - e1 * e1)) <= 1e-6


class TestClosedForms:
    def test_odd_examples(self):
        assert abs(closed_form_odd(HALF, 1) - math.pi / 4) <= 1e-15
        assert abs(closed_form_odd(HALF, 3) - 3 * (1 - math.pi / 4)) <= 1e-15

    def test_odd_large_d_matches_recursion(self):
        assert abs(closed_form_odd(P34, 45) - expect_win_rate(P34, 45, "recursion")) <= 1e-12

    def test_even_examples(self):
        assert abs(closed_form_even(HALF, 2) - math.log(2)) <= 1e-15
        assert abs(closed_form_even(HALF, 4) - expect_win_rate(HALF, 4)) <= 1e-10
        assert abs(closed_form_even(P34, 10) - expect_win_rate(P34, 10, "recursion")) <= 1e-12

    def test_parity_and_p1_rejected(self):
        with pytest.raises(ValueError):
            closed_form_odd(HALF, 2)
        with pytest.raises(ValueError):
            closed_form_even(HALF, 3)
        with pytest.raises(ValueError):
            closed_form_odd(BiasParams(1), 3)
        with pytest.raises(ValueError):
            closed_form_even(BiasParams(1), 2)

    def test_precision_argument(self):
        assert closed_form_odd(P34, 5, precision=80) == pytest.approx(closed_form_odd(P34, 5), abs=1e-15)

    def test_naive_double_loses_digits(self):
        exact = closed_form_odd(P34, 45)
        assert abs(closed_form_naive(P34, 45) - exact) > 1e-8

    def test_high_precision_reference(self):
        # Independent 50-digit evaluation of int_0^1 u^(d-1) h(u) du.
        with mpmath.workdps(50):
            p, q = mpmath.mpf(3) / 4, mpmath.mpf(1) / 4
            ref = 0.5 + 0.5 * 21 * mpmath.quad(lambda u: u**20 * (p - q * u * u) / (p + q * u * u), [0, 1])
        assert abs(closed_form_odd(P34, 21) - float(ref)) <= 1e-15


class TestRecursions:
    def test_f_examples(self):
        assert f_sequence(1.0, 0).values[0] == pytest.approx(math.pi / 4, abs=1e-15)
        assert f_sequence(1 / 3, 0).values[0] == pytest.approx(0.906899682117108925, abs=1e-15)
        assert f_sequence(1.0, 1).values[1] == pytest.approx(0.214601836602551690, abs=1e-15)

    def test_g_examples(self):
        assert g_sequence(1.0, 0).values[0] == pytest.approx(math.log(2), abs=1e-15)
        # mpmath quadrature of int_1^(4/3) (x-1)/x dx
        assert g_sequence(1 / 3, 1).values[1] == pytest.approx(0.0456512608815524059, abs=1e-16)
        for r in (0.01, 0.3, 0.77):
            assert g_sequence(r, 0).values[0] == pytest.approx(math.log1p(r), abs=1e-15)

    def test_f_against_mpmath(self):
        for r in (0.0101, 1 / 3, 0.8, 0.95, 1.0):
            table = f_sequence(r, 30)
            assert table.certified_abs_error <= 1e-15
            with mpmath.workdps(30):
                for k in (0, 7, 30):
                    ref = mpmath.quad(lambda u: u ** (2 * k) / (1 + r * u * u), [0, 1])
                    assert abs(table.values[k] - float(ref)) <= 1e-15

    def test_g_against_mpmath(self):
        for r in (0.0101, 1 / 3, 0.95, 1.0):
            table = g_sequence(r, 25)
            assert table.certified_abs_error <= 1e-15
            with mpmath.workdps(40):
                for k in (0, 5, 25):
                    # G_k = r^(k+1) int_0^1 t^k / (1 + r t) dt keeps relative accuracy.
                    ref = r ** (k + 1) * mpmath.quad(lambda t: t**k / (1 + r * t), [0, 1])
                    assert abs(table.values[k] - float(ref)) <= 1e-15 * r**k + 1e-300

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=1.0), st.integers(min_value=0, max_value=80))
    def test_tables_respect_bounds(self, r, m):
        for table in (f_sequence(r, m), g_sequence(r, m)):
            lo, hi = table.bounds()
            vals = table.values if table.kind == "F" else table.scaled
            assert np.all(vals >= lo - table.certified_abs_error)
            assert np.all(vals <= hi + table.certified_abs_error)
            assert table.start_index >= m

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            f_sequence(0.0, 3)
        with pytest.raises(ValueError):
            g_sequence(0.5, -1)


@pytest.mark.parametrize("p, d, expected", [("3/4", 45, 90.0), (1, 7, 7.0), ("1/2", 3, math.inf)])
def test_expected_hitting_time(p, d, expected):
    assert expected_hitting_time(BiasParams(p), d) == expected
