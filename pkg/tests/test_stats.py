"""Welch tests, effect sizes, and confidence intervals against oracles."""

import math

import numpy as np
import pytest
from scipy import integrate

from fairbandit.errors import ContractViolationError, DegenerateDataError
from fairbandit.stats import (Alternative, ci95, cohens_d, pooled_welch_variant,
                              welch_test)

# fixed 20-element fixtures for the oracle comparison
FIXTURE_A = [0.4571, 0.4458, 0.4629, 0.4511, 0.4502, 0.4687, 0.4533, 0.4440,
             0.4618, 0.4565, 0.4498, 0.4551, 0.4612, 0.4470, 0.4534, 0.4608,
             0.4522, 0.4587, 0.4495, 0.4556]
FIXTURE_B = [0.4466, 0.4391, 0.4552, 0.4401, 0.4463, 0.4582, 0.4428, 0.4337,
             0.4512, 0.4478, 0.4385, 0.4450, 0.4523, 0.4369, 0.4441, 0.4513,
             0.4422, 0.4490, 0.4399, 0.4455]


def t_pdf(x, df):
    """Student-t density written out explicitly for the quadrature oracle."""
    return (math.gamma((df + 1) / 2.0)
            / (math.sqrt(df * math.pi) * math.gamma(df / 2.0))
            * (1.0 + x * x / df) ** (-(df + 1) / 2.0))


def upper_tail_by_quadrature(t, df):
    """P(T >= t) via adaptive quadrature of the explicit density."""
    if t >= 0:
        value, _err = integrate.quad(t_pdf, t, np.inf, args=(df,))
        return value
    value, _err = integrate.quad(t_pdf, -np.inf, t, args=(df,))
    return 1.0 - value


def welch_reference(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    return t, df


class TestWelch:
    def test_identical_samples_two_sided_p_is_one(self):
        sample = [0.1, 0.2, 0.3, 0.4]
        result = welch_test(sample, list(sample), Alternative.UNEQUAL)
        assert result.t_statistic == pytest.approx(0.0)
        assert result.p_value == pytest.approx(1.0)

    def test_extreme_separation(self):
        a = [0.0, 0.0001, -0.0001, 0.0]
        b = [1.0, 1.0001, 0.9999, 1.0]
        result = welch_test(b, a, Alternative.UNEQUAL)
        assert result.p_value < 1e-6

    def test_fixture_matches_quadrature_oracle(self):
        t, df = welch_reference(FIXTURE_A, FIXTURE_B)
        for alternative, expected in (
                (Alternative.WOMEN_BETTER, upper_tail_by_quadrature(t, df)),
                (Alternative.WOMEN_WORSE, 1.0 - upper_tail_by_quadrature(t, df)),
                (Alternative.UNEQUAL,
                 2.0 * min(upper_tail_by_quadrature(t, df),
                           1.0 - upper_tail_by_quadrature(t, df)))):
            result = welch_test(FIXTURE_A, FIXTURE_B, alternative)
            assert result.t_statistic == pytest.approx(t, abs=1e-12)
            assert result.degrees_of_freedom == pytest.approx(df, abs=1e-9)
            assert result.p_value == pytest.approx(expected, abs=1e-6)

    def test_two_sided_identity(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(0.5, 0.1, 30), rng.normal(0.48, 0.12, 25)
        one = welch_test(a, b, Alternative.WOMEN_BETTER).p_value
        two = welch_test(a, b, Alternative.UNEQUAL).p_value
        assert two == pytest.approx(2.0 * min(one, 1.0 - one), abs=1e-15)

    def test_swap_antisymmetry(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(0.5, 0.1, 40), rng.normal(0.52, 0.08, 40)
        fwd = welch_test(a, b, Alternative.WOMEN_BETTER)
        rev = welch_test(b, a, Alternative.WOMEN_BETTER)
        assert fwd.t_statistic == pytest.approx(-rev.t_statistic, abs=1e-12)
        assert fwd.p_value == pytest.approx(1.0 - rev.p_value, abs=1e-12)

    def test_location_shift_and_scale_invariance(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(0.5, 0.1, 30), rng.normal(0.45, 0.2, 35)
        base = welch_test(a, b, Alternative.UNEQUAL)
        shifted = welch_test(a + 5.0, b + 5.0, Alternative.UNEQUAL)
        scaled = welch_test(a * 3.0, b * 3.0, Alternative.UNEQUAL)
        for other in (shifted, scaled):
            assert other.t_statistic == pytest.approx(base.t_statistic, abs=1e-9)
            assert other.degrees_of_freedom == pytest.approx(
                base.degrees_of_freedom, rel=1e-12)
            assert other.p_value == pytest.approx(base.p_value, abs=1e-12)

    def test_smaller_is_better_flips_tail(self):
        rng = np.random.default_rng(3)
        women = rng.normal(0.10, 0.02, 50)   # fewer mistakes
        men = rng.normal(0.14, 0.02, 50)
        better = welch_test(women, men, Alternative.WOMEN_BETTER,
                            larger_is_better=False)
        worse = welch_test(women, men, Alternative.WOMEN_WORSE,
                           larger_is_better=False)
        assert better.p_value < 0.01
        assert worse.p_value > 0.99

    def test_degenerate_and_contract_errors(self):
        with pytest.raises(ContractViolationError):
            welch_test([0.1], [0.2, 0.3], Alternative.UNEQUAL)
        with pytest.raises(DegenerateDataError):
            welch_test([0.5, 0.5], [0.5, 0.5], Alternative.UNEQUAL)

    def test_pooled_variant_close_for_equal_variances(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(0.5, 0.1, 60), rng.normal(0.52, 0.1, 60)
        w = welch_test(a, b, Alternative.UNEQUAL)
        p = pooled_welch_variant(a, b, Alternative.UNEQUAL)
        assert p.p_value == pytest.approx(w.p_value, rel=0.05)


class TestCohensD:
    def test_equal_means_zero(self):
        assert cohens_d(0.5, 0.1, 10, 0.5, 0.2, 10).cohens_d == 0.0

    def test_reference_values(self):
        d = cohens_d(0.457, 0.029, 100, 0.446, 0.037, 100).cohens_d
        assert d == pytest.approx(0.331, abs=0.001)
        assert abs(d - 0.322) <= 0.02

    def test_unit_case(self):
        assert cohens_d(1.0, 1.0, 20, 0.0, 1.0, 20).cohens_d == pytest.approx(1.0)

    def test_sign_flips_on_swap(self):
        d1 = cohens_d(0.6, 0.1, 30, 0.5, 0.2, 40).cohens_d
        d2 = cohens_d(0.5, 0.2, 40, 0.6, 0.1, 30).cohens_d
        assert d1 == pytest.approx(-d2, abs=1e-15)

    def test_scale_invariance(self):
        d1 = cohens_d(0.6, 0.1, 30, 0.5, 0.2, 30).cohens_d
        d2 = cohens_d(6.0, 1.0, 30, 5.0, 2.0, 30).cohens_d
        assert d1 == pytest.approx(d2, abs=1e-12)

    def test_errors(self):
        with pytest.raises(DegenerateDataError):
            cohens_d(0.5, 0.0, 10, 0.6, 0.0, 10)
        with pytest.raises(ContractViolationError):
            cohens_d(0.5, 0.1, 1, 0.6, 0.1, 10)


class TestCi95:
    def test_constant_samples_degenerate_interval(self):
        lo, hi = ci95([0.4, 0.4, 0.4])
        assert lo == pytest.approx(0.4, abs=1e-12)
        assert hi == pytest.approx(lo, abs=1e-12)

    def test_two_point_hand_arithmetic(self):
        # mean 0.5, sample std 0.7071..., half-width 1.96 * std / sqrt(2) = 0.98
        lo, hi = ci95([0.0, 1.0])
        independent_half = 1.96 * math.sqrt(0.5) / math.sqrt(2.0)
        assert independent_half == pytest.approx(0.98, abs=1e-12)
        assert lo == pytest.approx(0.5 - 0.98, abs=1e-12)
        assert hi == pytest.approx(0.5 + 0.98, abs=1e-12)

    def test_monte_carlo_width(self):
        rng = np.random.default_rng(5)
        lo, hi = ci95(rng.standard_normal(10_000))
        width = hi - lo
        assert abs(width - 2 * 1.96 / 100.0) / (2 * 1.96 / 100.0) < 0.05

    def test_too_few_samples(self):
        with pytest.raises(ContractViolationError):
            ci95([0.5])
