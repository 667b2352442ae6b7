"""Truncated-series arithmetic, evaluation, and radius extrapolation."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from polyagibbs import (
    InsufficientData,
    PreconditionError,
    TailNotControlled,
    TruncatedSeries,
    evaluate,
    geometric,
    radius_estimate,
    series_from_terms,
)

F = Fraction


def poly(*coeffs):
    return TruncatedSeries([F(c) for c in coeffs], len(coeffs) - 1)


small_series = st.lists(
    st.fractions(min_value=0, max_value=4, max_denominator=6),
    min_size=1,
    max_size=9,
).map(lambda cs: TruncatedSeries(cs, 10))


class TestArithmetic:
    def test_mul_matches_double_loop(self):
        a = poly(1, 2, 0, 3)
        b = TruncatedSeries([F(0), F(5), F(7)], 3)
        c = a * b
        for n in range(4):
            expect = sum(a[k] * b[n - k] for k in range(n + 1))
            assert c[n] == expect

    @given(small_series, small_series)
    @settings(max_examples=60, deadline=None)
    def test_mul_commutes(self, a, b):
        assert a * b == b * a

    @given(small_series, small_series, small_series)
    @settings(max_examples=60, deadline=None)
    def test_mul_distributes(self, a, b, c):
        assert a * (b + c) == a * b + a * c

    def test_scalar_mul(self):
        assert F(1, 2) * poly(2, 4) == poly(1, 2)

    def test_pow(self):
        g = poly(0, 1, 1)
        assert g**3 == g * g * g
        assert g**0 == TruncatedSeries([F(1)], 2)

    def test_coefficients_must_be_nonnegative(self):
        with pytest.raises(ValueError):
            poly(1, -1)

    def test_getitem_beyond_truncation_raises(self):
        with pytest.raises(IndexError):
            poly(1, 2)[5]


class TestExp:
    def test_exp_of_log_geometric(self):
        # exp(sum z^i / i) = 1/(1-z)
        n = 30
        arg = TruncatedSeries([F(0)] + [F(1, i) for i in range(1, n + 1)], n)
        assert arg.exp() == geometric(n)

    def test_exp_rejects_constant_term(self):
        with pytest.raises(PreconditionError):
            poly(1, 1).exp()

    @given(
        st.lists(
            st.fractions(min_value=0, max_value=2, max_denominator=4),
            min_size=1,
            max_size=6,
        ),
        st.lists(
            st.fractions(min_value=0, max_value=2, max_denominator=4),
            min_size=1,
            max_size=6,
        ),
    )
    @settings(max_examples=40, deadline=None)
    def test_exp_additive(self, xs, ys):
        a = TruncatedSeries([F(0)] + xs, 8)
        b = TruncatedSeries([F(0)] + ys, 8)
        assert (a + b).exp() == a.exp() * b.exp()

    def test_substitute_power(self):
        g = poly(0, 1, 2)
        sub = g.substitute_power(3, truncation=8)
        assert sub.coeffs == (F(0),) * 3 + (F(1),) + (F(0),) * 2 + (F(2), F(0), F(0))


class TestLattice:
    def test_span_of_even_series(self):
        g = series_from_terms([(2, F(1)), (6, F(3)), (10, F(1))], 12)
        assert g.lattice_span() == 4
        assert g.lattice_offset() == 2
        assert series_from_terms([(2, 1), (4, 1), (8, 1)], 10).lattice_span() == 2

    def test_span_single_term(self):
        assert series_from_terms([(3, F(5))], 10).lattice_span() == 3

    def test_span_dense(self):
        assert geometric(20, F(1, 2)).lattice_span() == 1


class TestJson:
    def test_roundtrip(self):
        g = series_from_terms([(0, F(1)), (3, F(7, 2))], 5)
        assert TruncatedSeries.from_json(g.to_json()) == g

    def test_format_uses_exact_rationals(self):
        g = poly(1, "1/3")
        assert '"1/3"' in g.to_json()


class TestEvaluate:
    def test_polynomial_short_circuit(self):
        ev = evaluate(TruncatedSeries([1, 2, 3], 10), 0.5)
        assert ev.tail == 0.0
        assert ev.value == pytest.approx(1 + 1 + 0.75)

    def test_geometric_value(self):
        ev = evaluate(geometric(120), 0.5)
        assert ev.value == pytest.approx(2.0, rel=1e-9)

    def test_geometric_with_weights(self):
        # g_n = (1/3)^n evaluated at 1: sums to 3/2
        ev = evaluate(geometric(100, F(1, 3)), 1.0)
        assert ev.value == pytest.approx(1.5, rel=1e-9)

    def test_algebraic_decay_tail(self):
        # g_n = n^{-3}: partial sums converge to zeta(3); the fitted tail
        # must close most of the truncation gap
        n = 300
        g = TruncatedSeries([F(0)] + [F(1, k**3) for k in range(1, n + 1)], n)
        ev = evaluate(g, 1.0)
        zeta3 = 1.2020569031595943
        assert abs(ev.value - zeta3) < 1e-4
        assert abs(ev.partial - zeta3) > 5e-6  # the partial sum alone is off

    def test_divergent_raises(self):
        g = TruncatedSeries([F(2) ** n for n in range(60)], 59)
        with pytest.raises(TailNotControlled):
            evaluate(g, 1.0)

    @given(st.floats(min_value=0.05, max_value=0.45))
    @settings(max_examples=25, deadline=None)
    def test_monotone_in_x(self, x):
        g = geometric(80)
        assert evaluate(g, x).value <= evaluate(g, x + 0.05).value + 1e-12


class TestRadius:
    @pytest.mark.parametrize("c", [F(1, 2), F(1, 3), F(2)])
    def test_pure_geometric(self, c):
        est = radius_estimate(geometric(60, c))
        assert est.rho == pytest.approx(1.0 / float(c), abs=1e-9)
        assert est.span == 1

    def test_polynomially_corrected(self):
        # g_n = n^{-3} 2^{-n} has radius 2; the 1/n-extrapolated estimate
        # must land within 1e-3 (the raw last ratio does not)
        n = 800
        g = TruncatedSeries(
            [F(0)] + [F(1, k**3 * 2**k) for k in range(1, n + 1)], n
        )
        est = radius_estimate(g)
        assert abs(est.rho - 2.0) < 1e-3
        raw = float(g[n - 1] / g[n])
        assert abs(raw - 2.0) > 5e-3

    def test_even_lattice(self):
        g = series_from_terms(
            [(2 * k, F(1, 4**k)) for k in range(1, 30)], 60
        )
        est = radius_estimate(g)
        assert est.span == 2
        assert est.rho == pytest.approx(2.0, abs=1e-6)

    def test_too_short(self):
        with pytest.raises(InsufficientData):
            radius_estimate(poly(0, 1, 1))
