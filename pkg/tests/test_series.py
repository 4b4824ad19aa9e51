"""
Unit tests for truncated iterated Laurent series
================================================
"""

import os
import sys
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from models.errors import (
    CoefficientNotAPower,
    DimensionMismatch,
    ExponentNotDivisible,
    NotAUnit,
    ResidueObstruction,
    WindowTooSmall,
    ZeroSeries,
)
from models.series import (
    INF,
    AuxParam,
    XSeries,
    add_bound,
    binomial,
    deriv_lo,
    merge_aux,
    product_box,
    rational_root,
    xs_truncate_aux,
)


def poly(table, n=1, taylor=True, **kwargs):
    return XSeries.make(n, table, taylor=taylor, **kwargs)


fractions = st.fractions(min_value=-5, max_value=5, max_denominator=4)
taylor_tables = st.dictionaries(
    st.tuples(st.integers(0, 2), st.integers(0, 2)), fractions, max_size=4
)
laurent_tables = st.dictionaries(
    st.tuples(st.integers(-1, 2), st.integers(-1, 2)),
    fractions.filter(lambda c: c != 0),
    min_size=1,
    max_size=3,
)


class TestHelpers:
    """Test cases for bound arithmetic and exact roots"""

    def test_add_bound_absorbs_minus_infinity(self):
        """Test that -inf absorbs in bound sums"""
        assert add_bound(-INF, 3) == -INF
        assert add_bound(2, 3) == 5

    def test_deriv_lo(self):
        """Test support bounds after differentiation"""
        assert deriv_lo(2, 3) == 0
        assert deriv_lo(-1, 2) == -3
        assert deriv_lo(4, 0) == 4

    def test_generalized_binomial(self):
        """Test binomial coefficients with rational upper index"""
        assert binomial(Fraction(1, 2), 2) == Fraction(-1, 8)
        assert binomial(-1, 3) == -1
        assert binomial(5, 2) == 10

    def test_rational_root(self):
        """Test exact rational roots"""
        assert rational_root(Fraction(8, 27), 3) == Fraction(2, 3)
        assert rational_root(-8, 3) == -2
        with pytest.raises(CoefficientNotAPower):
            rational_root(2, 2)
        with pytest.raises(CoefficientNotAPower):
            rational_root(-4, 2)

    def test_merge_aux_takes_smaller_cap(self):
        """Test merging auxiliary parameter lists"""
        merged = merge_aux((AuxParam("t", 3),), (AuxParam("eps", 1), AuxParam("t", 2)))
        assert merged == (AuxParam("t", 2), AuxParam("eps", 1))


class TestSeriesArithmetic:
    """Test cases for sums, products and derivatives"""

    def setup_method(self):
        """Setup for each test method"""
        self.one_plus_x = poly({(0,): 1, (1,): 1})
        self.one_minus_x = poly({(0,): 1, (1,): -1})

    def test_zero_terms_are_dropped(self):
        """Test that zero coefficients are not stored"""
        s = poly({(0,): 0, (2,): 3})
        assert s.terms == {(2,): Fraction(3)}

    def test_taylor_mode_rejects_negative_bound(self):
        """Test Taylor variables need a nonnegative support bound"""
        with pytest.raises(ValueError):
            XSeries(1, {}, (True,), (-1,), (INF,))

    def test_product(self):
        """Test (1 + x)(1 - x) = 1 - x^2"""
        product = self.one_plus_x * self.one_minus_x
        assert product.terms == {(0,): 1, (2,): -1}
        assert product.is_exact()

    def test_product_box(self):
        """Test exactness bound of a product of boxed series"""
        a = poly({(0,): 1}, hi=(3,))
        b = poly({(1,): 1}, taylor=False, lo=(1,), hi=(5,))
        lo, hi = product_box(a, b)
        assert lo == (1,)
        assert hi == (4,)

    def test_dimension_mismatch(self):
        """Test mixing variable counts"""
        with pytest.raises(DimensionMismatch):
            self.one_plus_x + poly({(0, 0): 1}, n=2)

    def test_derivative_lowers_exactness(self):
        """Test differentiation moves the exactness bound down"""
        s = poly({(3,): 2}, hi=(4,))
        d = s.deriv(0)
        assert d.terms == {(2,): 6}
        assert d.hi == (3,)

    def test_antiderivative(self):
        """Test integration with zero constant"""
        s = poly({(2,): 3})
        assert s.antideriv(0).terms == {(3,): 1}

    def test_antiderivative_of_reciprocal_fails(self):
        """Test x^-1 has no antiderivative"""
        s = poly({(-1,): 1}, taylor=False)
        with pytest.raises(ResidueObstruction):
            s.antideriv(0)

    def test_agrees_on_common_box(self):
        """Test comparison ignores terms outside the common box"""
        short = poly({(0,): 1, (1,): 1}, hi=(1,))
        longer = poly({(0,): 1, (1,): 1, (2,): 7})
        assert short.agrees_with(longer)
        assert not longer.agrees_with(poly({(0,): 1}))

    @given(taylor_tables, taylor_tables, taylor_tables)
    def test_ring_axioms(self, ta, tb, tc):
        """Test associativity, commutativity and distributivity of series products"""
        a, b, c = poly(ta, n=2), poly(tb, n=2), poly(tc, n=2)
        assert ((a * b) * c).agrees_with(a * (b * c))
        assert (a * b).agrees_with(b * a)
        assert (a * (b + c)).agrees_with(a * b + a * c)
        assert (a + (-a)).is_zero()

    @given(laurent_tables)
    def test_antiderivative_inverts_derivative(self, table):
        """Test integrating a derivative loses only the x1-constant terms"""
        a = poly(table, n=2, taylor=False)
        back = a.deriv(0).antideriv(0)
        assert back.terms == {k: v for k, v in table.items() if k[0] != 0}

    @given(taylor_tables)
    def test_derivative_window_is_sound(self, table):
        """Test differentiating a truncated series agrees with the full derivative"""
        a = poly(table, n=2)
        assert a.restrict_hi((1, 1)).deriv(0).agrees_with(a.deriv(0))


class TestInverseAndRoot:
    """Test cases for multiplicative inverses and roots"""

    def test_geometric_inverse(self):
        """Test 1/(1 - x) up to the x-degree cap"""
        inv = poly({(0,): 1, (1,): -1}).inverse(cap=4)
        assert inv.hi == (4,)
        assert inv.terms == {(k,): 1 for k in range(5)}

    def test_inverse_needs_cap(self):
        """Test an infinite expansion of an exact series needs a cap"""
        with pytest.raises(WindowTooSmall):
            poly({(0,): 1, (1,): -1}).inverse()

    def test_monomial_inverse_is_exact(self):
        """Test inverting a Laurent monomial"""
        inv = poly({(-1,): 2}, taylor=False).inverse()
        assert inv.terms == {(1,): Fraction(1, 2)}
        assert inv.is_exact()

    def test_non_unit(self):
        """Test x is not a unit of k[[x]]"""
        with pytest.raises(NotAUnit):
            poly({(1,): 1}).inverse(cap=3)

    def test_zero_inverse(self):
        """Test inverting zero"""
        with pytest.raises(ZeroSeries):
            poly({}).inverse()

    def test_mixed_sign_inverse(self):
        """Test 1/(x1 + x2) = sum (-1)^k x2^k x1^(-k-1) below the x2 cap"""
        a = poly({(1, 0): 1, (0, 1): 1}, n=2, taylor=False)
        inv = a.inverse(cap=3)
        assert inv.terms == {(-1, 0): 1, (-2, 1): -1, (-3, 2): 1, (-4, 3): -1}
        assert inv.lo == (-4, 0)
        assert (a * inv).agrees_with(poly({(0, 0): 1}, n=2))

    def test_mixed_sign_tail_round_trip(self):
        """Test a * a^-1 = 1 when the normalized tail has a negative x1-exponent"""
        a = poly({(0, 1): 1, (-1, 2): 1}, n=2, taylor=False)
        inv = a.inverse(cap=4)
        assert inv.coefficient((-3, 2)) == -1
        assert (a * inv).agrees_with(poly({(0, 0): 1}, n=2))

    def test_mixed_sign_root(self):
        """Test sqrt((x1 + x2)^2) = x1 + x2"""
        square = poly({(2, 0): 1, (1, 1): 2, (0, 2): 1}, n=2, taylor=False)
        assert square.root(2, cap=4).terms == {(1, 0): 1, (0, 1): 1}

    @given(laurent_tables, st.integers(1, 3))
    def test_laurent_inverse_property(self, table, cap):
        """Test a * a^-1 = 1 inside the box for Laurent polynomials in two variables"""
        a = poly(table, n=2, taylor=False)
        product = a * a.inverse(cap=cap)
        assert product.agrees_with(poly({(0, 0): 1}, n=2))

    def test_leading_term_order(self):
        """Test x_n is the most significant variable"""
        s = poly({(-1, 1): 1, (3, 0): 2}, n=2, taylor=False)
        assert s.leading() == ((3, 0), 2)

    def test_square_root(self):
        """Test sqrt((1 + x)^2) = 1 + x"""
        square = poly({(0,): 1, (1,): 2, (2,): 1})
        assert square.root(2, cap=4).terms == {(0,): 1, (1,): 1}

    def test_monomial_root(self):
        """Test sqrt(4 x^2) = 2x"""
        assert poly({(2,): 4}, taylor=False).root(2).terms == {(1,): 2}

    def test_root_errors(self):
        """Test root obstructions"""
        with pytest.raises(ExponentNotDivisible):
            poly({(3,): 1}, taylor=False).root(2)
        with pytest.raises(CoefficientNotAPower):
            poly({(0,): 2}).root(2)

    @given(taylor_tables, fractions.filter(lambda c: c != 0), st.integers(1, 4))
    def test_inverse_property(self, table, constant, cap):
        """Test a * a^-1 = 1 inside the box"""
        table = dict(table)
        table[(0, 0)] = constant
        a = poly(table, n=2)
        product = a * a.inverse(cap=cap)
        assert product.agrees_with(poly({(0, 0): 1}, n=2))


class TestResidueAndSplitting:
    """Test cases for residues and x-splittings"""

    def test_residue(self):
        """Test the coefficient of x^-1"""
        assert poly({(-1,): 3, (0,): 1}, taylor=False).residue() == 3
        assert poly({(-1, -1): 5, (-1, 0): 1}, n=2, taylor=False).residue() == 5

    def test_residue_outside_box(self):
        """Test the residue is unknown above the exactness bound"""
        s = poly({(-3,): 1}, taylor=False, hi=(-2,))
        with pytest.raises(WindowTooSmall):
            s.residue()

    def test_split_x(self):
        """Test splitting by x-exponent at threshold 1"""
        s = poly({(-1,): 1, (0,): 2, (1,): 3}, taylor=False)
        upper, lower = s.split_x(0)
        assert upper.terms == {(1,): 3}
        assert lower.terms == {(-1,): 1, (0,): 2}


class TestAuxiliaryParameters:
    """Test cases for nilpotent formal-time parameters"""

    def setup_method(self):
        """Setup for each test method"""
        self.t = AuxParam("t", 2)
        self.one = XSeries.constant(1, 1, taylor=True, aux=(self.t,))

    def test_integrate_to_cap(self):
        """Test repeated integration in t stops at the cap"""
        once = self.one.aux_integrate("t")
        twice = once.aux_integrate("t")
        assert once.terms == {(0, 1): 1}
        assert twice.terms == {(0, 2): Fraction(1, 2)}
        assert twice.aux_integrate("t").is_zero()

    def test_derivative_inverts_integral(self):
        """Test d/dt of the integral"""
        once = self.one.aux_integrate("t")
        assert once.aux_deriv("t").agrees_with(self.one)

    def test_constant_part(self):
        """Test dropping the time-dependent part"""
        s = self.one + self.one.aux_integrate("t")
        assert s.aux_constant_part().terms == {(0, 0): 1}
        assert not s.is_aux_constant()

    def test_with_aux_cannot_lose_parameter(self):
        """Test re-keying refuses to drop a parameter"""
        with pytest.raises(DimensionMismatch):
            self.one.with_aux(())

    def test_product_respects_cap(self):
        """Test t * t^2 vanishes when the cap is 2"""
        t1 = XSeries.monomial(1, (0,), aux=(self.t,), auxexps=(1,))
        t2 = XSeries.monomial(1, (0,), aux=(self.t,), auxexps=(2,))
        assert (t1 * t2).is_zero()

    def test_truncate_lowers_cap(self):
        """Test truncating to cap 1 drops the t^2 term"""
        s = self.one + self.one.aux_integrate("t") + self.one.aux_integrate("t").aux_integrate("t")
        cut = xs_truncate_aux(s, "t", 1)
        assert cut.aux == (AuxParam("t", 1),)
        assert cut.terms == {(0, 0): 1, (0, 1): 1}
