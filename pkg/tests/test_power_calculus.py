"""Exact power-function calculus: operator rules, closure, invariants.

Expected Gamma-ratio values are frozen from the C library's math.gamma,
which is independent of the package's own Lanczos implementation.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclevel.errors import DomainError, UsageError
from fraclevel.power_calculus import (
    EXP_TOL, MonomialSum, caputo_derivative, constant, ddt, evaluate,
    format_monomial_sum, hilfer_derivative, max_coeff_discrepancy, monomial,
    parse_monomial_sum, rl_derivative, rl_integral,
)

# frozen oracle values (math.gamma ratios)
J_HALF_OF_T = math.gamma(2.0) / math.gamma(2.5)        # 0.7522527780636751
D_HALF_OF_T = math.gamma(2.0) / math.gamma(1.5)        # 1.1283791670955126


def single_coeff(f: MonomialSum, alpha: float) -> float:
    for m in f.terms:
        if abs(m.alpha - alpha) <= 1e-9:
            return m.coeff
    return 0.0


class TestRlIntegral:
    def test_antiderivative_of_constant(self):
        out = rl_integral(constant(1.0), 1.0)
        assert len(out.terms) == 1
        assert out.terms[0].alpha == 1.0
        assert out.terms[0].coeff == pytest.approx(1.0, abs=1e-14)

    def test_half_integral_of_t(self):
        out = rl_integral(monomial(1.0, 1.0), 0.5)
        assert len(out.terms) == 1
        assert out.terms[0].alpha == pytest.approx(1.5, abs=1e-15)
        assert out.terms[0].coeff == pytest.approx(J_HALF_OF_T, rel=1e-14)
        assert abs(J_HALF_OF_T - 0.7522527781) < 5e-11

    def test_semigroup_on_t(self):
        via_two = rl_integral(rl_integral(monomial(1.0, 1.0), 0.4), 0.3)
        direct = rl_integral(monomial(1.0, 1.0), 0.7)
        assert max_coeff_discrepancy(via_two, direct) < 1e-12

    def test_rejects_nonpositive_order(self):
        with pytest.raises(DomainError):
            rl_integral(constant(1.0), 0.0)
        with pytest.raises(DomainError):
            rl_integral(constant(1.0), -0.2)


class TestRlDerivative:
    def test_kernel_annihilation(self):
        out = rl_derivative(monomial(1.0, -0.5), 0.5)
        assert out.is_zero()

    def test_half_derivative_of_t(self):
        out = rl_derivative(monomial(1.0, 1.0), 0.5)
        assert out.terms[0].alpha == pytest.approx(0.5, abs=1e-15)
        assert out.terms[0].coeff == pytest.approx(D_HALF_OF_T, rel=1e-14)
        assert abs(D_HALF_OF_T - 1.1283791671) < 5e-11

    def test_first_fundamental_on_sum(self):
        f = MonomialSum.from_terms([(2.0, 2.0), (1.0, 1.0)])
        assert max_coeff_discrepancy(rl_derivative(rl_integral(f, 0.5), 0.5), f) < 1e-13

    def test_leaving_algebra_raises(self):
        with pytest.raises(DomainError):
            rl_derivative(monomial(1.0, -0.8), 0.5)


class TestCaputo:
    def test_constant_maps_to_zero(self):
        assert caputo_derivative(constant(5.0), 0.3).is_zero()

    def test_constant_term_dropped(self):
        f = MonomialSum.from_terms([(1.0, 1.0), (3.0, 0.0)])
        out = caputo_derivative(f, 0.5)
        assert len(out.terms) == 1
        assert out.terms[0].coeff == pytest.approx(D_HALF_OF_T, rel=1e-14)

    def test_matches_hilfer_type_one(self):
        f = monomial(1.0, 2.0)
        for rho in (0.2, 0.5, 0.8):
            assert max_coeff_discrepancy(
                caputo_derivative(f, rho), hilfer_derivative(f, rho, 1.0)) < 1e-13

    def test_negative_exponent_rejected(self):
        with pytest.raises(DomainError):
            caputo_derivative(monomial(1.0, -0.5), 0.5)


class TestHilfer:
    def test_type_zero_is_rl(self):
        f = monomial(1.0, 2.0)
        for rho in (0.25, 0.5, 0.75):
            assert max_coeff_discrepancy(
                hilfer_derivative(f, rho, 0.0), rl_derivative(f, rho)) < 1e-13

    def test_kernel_element(self):
        rho, nu = 0.5, 0.5
        eta = rho + nu - rho * nu
        out = hilfer_derivative(monomial(1.0, eta - 1.0), rho, nu)
        assert out.is_zero()

    def test_type_out_of_range(self):
        with pytest.raises(DomainError):
            hilfer_derivative(monomial(1.0, 1.0), 0.5, 1.5)


class TestEvaluate:
    def test_affine(self):
        f = MonomialSum.from_terms([(2.0, 1.0), (1.0, 0.0)])
        assert evaluate(f, 2.0) == pytest.approx(5.0, abs=1e-15)

    def test_sqrt(self):
        assert evaluate(monomial(1.0, 0.5), 4.0) == pytest.approx(2.0, abs=1e-15)

    def test_singular_at_origin(self):
        with pytest.raises(DomainError):
            evaluate(monomial(1.0, -0.5), 0.0)

    def test_array_input(self):
        f = monomial(1.0, 2.0)
        np.testing.assert_allclose(evaluate(f, np.array([0.0, 1.0, 3.0])),
                                   [0.0, 1.0, 9.0], atol=1e-15)


class TestNormalization:
    def test_duplicate_exponents_merge(self):
        f = MonomialSum.from_terms([(1.0, 0.7), (2.0, 0.7 + 1e-13)])
        assert len(f.terms) == 1
        assert f.terms[0].coeff == pytest.approx(3.0)

    def test_zero_terms_removed(self):
        f = MonomialSum.from_terms([(1.0, 1.0), (-1.0, 1.0)])
        assert f.is_zero()

    def test_sorted(self):
        f = MonomialSum.from_terms([(1.0, 2.0), (1.0, -0.5), (1.0, 0.3)])
        alphas = [m.alpha for m in f.terms]
        assert alphas == sorted(alphas)


class TestSerialization:
    @pytest.mark.parametrize("pairs", [
        [(1.0, 0.0)],
        [(2.0, 1.0), (1.0, 0.0)],
        [(-0.25, 1.0), (0.5, 0.5), (1.0 / 3.0, 2.0)],
        [(1.2345678901234567e-05, -0.123456789012345)],
        [],
    ])
    def test_round_trip_exact(self, pairs):
        f = MonomialSum.from_terms(pairs)
        g = parse_monomial_sum(format_monomial_sum(f))
        assert g.terms == f.terms  # bitwise round trip at 17 significant digits

    def test_parse_forms(self):
        assert parse_monomial_sum("t^2").terms == monomial(1.0, 2.0).terms
        assert parse_monomial_sum("t").terms == monomial(1.0, 1.0).terms
        assert parse_monomial_sum("3").terms == constant(3.0).terms
        assert parse_monomial_sum("2*t + 1").terms == \
            MonomialSum.from_terms([(2.0, 1.0), (1.0, 0.0)]).terms
        assert parse_monomial_sum("-t^0.5 + 2e-3*t^1.5").terms == \
            MonomialSum.from_terms([(-1.0, 0.5), (2e-3, 1.5)]).terms

    def test_parse_garbage(self):
        with pytest.raises(UsageError):
            parse_monomial_sum("t^^2")


# ---------------------------------------------------------------------------
# property-based invariants
# ---------------------------------------------------------------------------

coeffs = st.floats(min_value=-10.0, max_value=10.0,
                   allow_nan=False, allow_infinity=False).filter(
    lambda c: c == 0.0 or abs(c) > 1e-8)
alphas = st.floats(min_value=-0.9, max_value=4.0,
                   allow_nan=False, allow_infinity=False)
orders = st.floats(min_value=0.05, max_value=0.95)


def sums(min_alpha=-0.9):
    # exponents on a 1e-6 lattice: exact duplicates merge exactly, while
    # sub-merge-tolerance straddles (which only hold to ~1e-12) cannot occur
    return st.lists(
        st.tuples(coeffs,
                  st.floats(min_value=min_alpha, max_value=4.0,
                            allow_nan=False, allow_infinity=False).map(
                      lambda a: round(a, 6))),
        min_size=1, max_size=5,
    ).map(MonomialSum.from_terms)


@settings(max_examples=150, deadline=None)
@given(f=sums(), r1=orders, r2=orders)
def test_semigroup_property(f, r1, r2):
    lhs = rl_integral(rl_integral(f, r2), r1)
    rhs = rl_integral(f, r1 + r2)
    assert max_coeff_discrepancy(lhs, rhs) < 1e-12


@settings(max_examples=150, deadline=None)
@given(f=sums(), rho=orders)
def test_first_fundamental_theorem(f, rho):
    assert max_coeff_discrepancy(rl_derivative(rl_integral(f, rho), rho), f) < 1e-12


@settings(max_examples=150, deadline=None)
@given(f=sums(min_alpha=0.0), rho=orders)
def test_second_fundamental_theorem(f, rho):
    # exponents >= 0 keep every term above the rho-1 annihilation line
    assert max_coeff_discrepancy(rl_integral(rl_derivative(f, rho), rho), f) < 1e-12


@settings(max_examples=100, deadline=None)
@given(f=sums(), g=sums(), rho=orders, s=coeffs)
def test_linearity(f, g, rho, s):
    lhs = rl_integral(f + s * g, rho)
    rhs = rl_integral(f, rho) + s * rl_integral(g, rho)
    assert max_coeff_discrepancy(lhs, rhs, relative=False) < 1e-13 * (
        1.0 + max((abs(m.coeff) for m in lhs.terms), default=0.0))


@settings(max_examples=50, deadline=None)
@given(rho=orders, c=st.floats(min_value=0.1, max_value=5.0))
def test_derivative_kernel_is_span_of_singular_power(rho, c):
    assert rl_derivative(monomial(c, rho - 1.0), rho).is_zero()
    # a nearby exponent is not annihilated
    out = rl_derivative(monomial(c, rho - 1.0 + 0.05), rho)
    assert not out.is_zero()
