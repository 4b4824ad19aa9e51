"""
Unit tests for pseudo-differential operators
============================================
"""

import os
import sys

import pytest
from hypothesis import given, strategies as st

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from models.errors import (
    DimensionMismatch,
    ExponentNotDivisible,
    NotInvertibleInE,
    WindowTooSmall,
    ZeroOperator,
)
from models.psdo import (
    OpTuple,
    PsdOp,
    Window,
    dual_monomial,
    generator_commutation_check,
    op_add,
    op_agrees,
    op_coefficient,
    op_commutator,
    op_inverse,
    op_mul,
    op_nu,
    op_order,
    op_pair,
    op_pow,
    op_residue,
    op_root,
    op_split,
    op_split_x,
    op_symbol,
    symbol_star,
    tuple_pair,
)
from models.series import INF, XSeries

fractions = st.fractions(min_value=-3, max_value=3, max_denominator=3).filter(lambda c: c != 0)


def operators(n, laurent=False):
    """Small exact operators with polynomial (or Laurent polynomial) coefficients."""
    xexp = st.tuples(*[st.integers(-1 if laurent else 0, 2)] * n)
    dexp = st.tuples(*[st.integers(-2, 2)] * n)
    tables = st.dictionaries(xexp, fractions, min_size=1, max_size=3)
    return st.dictionaries(dexp, tables, min_size=1, max_size=3).map(
        lambda coeffs: PsdOp.make(
            n, {d: XSeries.make(n, t, taylor=not laurent) for d, t in coeffs.items()}
        )
    )


def laurent(n, xexp, value=1):
    return XSeries.make(n, {tuple(xexp): value}, taylor=False)


class TestConstruction:
    """Test cases for operator construction and windows"""

    def test_with_floor_drops_low_terms(self):
        """Test raising the d-floor"""
        L = PsdOp.make(1, {(0,): 1, (-3,): 1}).with_floor((-2,))
        assert list(L.coeffs) == [(0,)]
        assert L.window.dfloor == (-2,)

    def test_support_bounds_enforced(self):
        """Test terms outside [dbot, dtop] are rejected"""
        window = Window.exact(1, dbot=(0,), dtop=(1,))
        with pytest.raises(ValueError):
            PsdOp(1, {(2,): XSeries.constant(1, 1, taylor=True)}, window)

    def test_window_report(self):
        """Test infinite bounds serialize as null"""
        data = PsdOp.d(1, 0).window.to_dict()
        assert data["dfloor"] == [None]
        assert data["xhi"] == [None]
        assert data["dtop"] == [1]
        assert data["ring"] == "E"

    def test_laurent_coefficients_give_p_type(self):
        """Test Laurent coefficients leave the subring E"""
        L = PsdOp.scalar(laurent(1, (-1,)))
        assert not L.is_e_type()

    def test_coefficient_outside_window(self):
        """Test the extractor refuses unknown coordinates"""
        L = PsdOp.d(1, 0).with_floor((-2,))
        assert op_coefficient(L, (0,), (1,)) == 1
        with pytest.raises(WindowTooSmall):
            op_coefficient(L, (0,), (-3,))

    def test_tuple_needs_n_slots(self):
        """Test tuples in n variables hold n operators"""
        with pytest.raises(DimensionMismatch):
            OpTuple((PsdOp.d(2, 0),))


class TestProduct:
    """Test cases for the Leibniz product"""

    def test_heisenberg_relation(self):
        """Test d x = x d + 1"""
        L = op_mul(PsdOp.d(1, 0), PsdOp.x(1, 0))
        assert op_coefficient(L, (1,), (1,)) == 1
        assert op_coefficient(L, (0,), (0,)) == 1
        assert L.term_count() == 2

    def test_inverse_d_times_x(self):
        """Test d^-1 x = x d^-1 - d^-2"""
        for floor in (None, (-4,)):
            L = op_mul(PsdOp.d(1, 0, -1), PsdOp.x(1, 0), floor=floor)
            assert op_coefficient(L, (1,), (-1,)) == 1
            assert op_coefficient(L, (0,), (-2,)) == -1
            assert L.term_count() == 2

    def test_commutator_counterexample(self):
        """Test ord [d1, d2 + x1 d2^-5] = -5"""
        L = PsdOp.d(2, 0)
        M = op_add(PsdOp.d(2, 1), PsdOp.monomial(2, (1, 0), (0, -5)))
        bracket = op_commutator(L, M)
        assert op_order(bracket) == -5
        assert op_coefficient(bracket, (0, 0), (0, -5)) == 1

    def test_generator_commutation(self):
        """Test constants commute with every generator"""
        assert generator_commutation_check(PsdOp.identity(2) * 3)
        assert not generator_commutation_check(PsdOp.d(2, 0))
        assert not generator_commutation_check(PsdOp.x(2, 0))

    @given(operators(2), operators(2), operators(2))
    def test_associativity(self, L, M, N):
        """Test (LM)N = L(MN) on the common window"""
        floor = (-4, -4)
        left = op_mul(op_mul(L, M, floor=floor), N, floor=floor)
        right = op_mul(L, op_mul(M, N, floor=floor), floor=floor)
        assert op_agrees(left, right)

    @given(operators(2), operators(2))
    def test_symbol_product_matches(self, L, M):
        """Test the symbol product formula against the Leibniz product"""
        floor = (-4, -4)
        star = symbol_star(op_symbol(L), op_symbol(M), floor=floor).as_operator()
        assert op_agrees(star, op_mul(L, M, floor=floor))

    @given(operators(2), operators(2))
    def test_truncation_is_sound(self, L, M):
        """Test a deeper floor never contradicts a shallower one"""
        shallow = op_mul(L, M, floor=(-3, -3))
        deep = op_mul(L, M, floor=(-6, -6))
        assert op_agrees(shallow, deep)

    @given(operators(2).filter(lambda op: not op.is_zero()),
           operators(2).filter(lambda op: not op.is_zero()))
    def test_order_is_additive(self, L, M):
        """Test nu(LM) = nu(L) + nu(M)"""
        product = op_mul(L, M, floor=(-4, -4))
        assert op_nu(product) == tuple(a + b for a, b in zip(op_nu(L), op_nu(M)))


class TestOrder:
    """Test cases for order and highest term"""

    def test_order_of_zero(self):
        """Test the zero operator has no order"""
        with pytest.raises(ZeroOperator):
            op_order(PsdOp.zero(1))

    def test_unknown_terms_can_dominate(self):
        """Test an x-free unknown region above nu in the lex order is detected"""
        window = Window((0, 0), (INF, INF), (-INF, -INF), (-2, -INF), (5, 0), (True, True))
        L = PsdOp(2, {(0, -1): XSeries.constant(2, 1, taylor=True)}, window)
        with pytest.raises(WindowTooSmall):
            op_nu(L)

    def test_nu_lex_order(self):
        """Test d_n is the most significant exponent"""
        L = op_add(PsdOp.d_power(2, (3, 0)), PsdOp.d_power(2, (-1, 1)))
        assert op_nu(L) == (-1, 1)

    @given(operators(1), operators(1))
    def test_commutator_order_bound_in_one_variable(self, L, M):
        """Test ord [L, M] <= ord L + ord M - 1 when n = 1"""
        bracket = op_commutator(L, M, floor=(-6,))
        if not bracket.is_zero():
            assert op_order(bracket) <= op_order(L) + op_order(M) - 1

    def test_order_bound_fails_in_two_variables(self):
        """Test [d1, x1] = 1 has order 0 > ord d1 + ord x1 - 1"""
        bracket = op_commutator(PsdOp.d(2, 0), PsdOp.x(2, 0))
        assert op_agrees(bracket, PsdOp.identity(2))
        assert op_order(bracket) == 0 > op_order(PsdOp.d(2, 0)) + op_order(PsdOp.x(2, 0)) - 1


class TestProjections:
    """Test cases for splittings"""

    def test_standard_split(self):
        """Test (d + x + d^-1)_+ and _-"""
        L = op_add(op_add(PsdOp.d(1, 0), PsdOp.x(1, 0)), PsdOp.d(1, 0, -1))
        plus, minus = op_split(L)
        assert set(plus.coeffs) == {(1,), (0,)}
        assert set(minus.coeffs) == {(-1,)}
        assert plus.window.is_exact_in_d()

    def test_x_split(self):
        """Test splitting (x^-1 + x) d by the x-exponent"""
        coeff = XSeries.make(1, {(-1,): 1, (1,): 1}, taylor=False)
        L = PsdOp.make(1, {(1,): coeff})
        upper, lower = op_split_x(L, 0)
        assert op_coefficient(upper, (1,), (1,)) == 1
        assert upper.term_count() == 1
        assert op_coefficient(lower, (-1,), (1,)) == 1
        assert lower.term_count() == 1

    @given(operators(2))
    def test_split_is_idempotent(self, L):
        """Test (L_+)_+ = L_+, (L_-)_- = L_- and L_+ + L_- = L"""
        plus, minus = op_split(L)
        again, rest = op_split(plus)
        assert op_agrees(again, plus) and rest.is_zero()
        rest, again = op_split(minus)
        assert op_agrees(again, minus) and rest.is_zero()
        assert op_agrees(op_add(plus, minus), L)

    @given(operators(2), operators(2))
    def test_split_window_is_sound(self, L, M):
        """Test splitting products on two floors"""
        shallow = op_split(op_mul(L, M, floor=(-3, -3)))
        deep = op_split(op_mul(L, M, floor=(-6, -6)))
        assert all(op_agrees(a, b) for a, b in zip(shallow, deep))


class TestInverseAndRoot:
    """Test cases for operator inverses and roots"""

    def test_inverse_of_d(self):
        """Test d^-1 is exact"""
        inv = op_inverse(PsdOp.d(1, 0))
        assert set(inv.coeffs) == {(-1,)}

    def test_inverse_property(self):
        """Test (d + x)(d + x)^-1 = 1 on the window"""
        L = op_add(PsdOp.d(1, 0), PsdOp.x(1, 0))
        inv = op_inverse(L, floor=(-5,))
        product = op_mul(L, inv, floor=(-4,))
        assert op_agrees(product, PsdOp.identity(1))
        assert product.window.dfloor == (-4,)

    def test_inverse_with_two_variable_laurent_coefficient(self):
        """Test ((x1 + x2) d2)^-1 = d2^-1 (x1 + x2)^-1 on the window"""
        f = XSeries.make(2, {(1, 0): 1, (0, 1): 1}, taylor=False)
        L = PsdOp.make(2, {(0, 1): f})
        inv = op_inverse(L, floor=(-3, -3), xcap=3)
        assert inv.coefficient((0, -1)).terms == {(-1, 0): 1, (-2, 1): -1}
        assert op_agrees(op_mul(L, inv, floor=(-3, -3)), PsdOp.identity(2))

    def test_inverse_of_zero(self):
        """Test the zero operator has no inverse"""
        with pytest.raises(ZeroOperator):
            op_inverse(PsdOp.zero(1))

    def test_square_root(self):
        """Test sqrt((d + x)^2) = d + x"""
        M = op_add(PsdOp.d(1, 0), PsdOp.x(1, 0))
        L = op_pow(M, 2)
        root = op_root(L, 2, floor=(-6,))
        assert op_agrees(root, M)

    def test_root_not_divisible(self):
        """Test the order must be divisible by m"""
        with pytest.raises(ExponentNotDivisible):
            op_root(PsdOp.d(1, 0, 3), 2)

    def test_not_invertible_in_e(self):
        """Test x d has no inverse with Taylor coefficients"""
        with pytest.raises(NotInvertibleInE):
            op_inverse(PsdOp.monomial(1, (1,), (1,)))

    def test_inverse_of_one_minus_x_dinv(self):
        """Test (1 - x d^-1)^-1 = 1 + x d^-1 + x^2 d^-2 + ..."""
        L = op_add(PsdOp.identity(1), PsdOp.monomial(1, (1,), (-1,), -1))
        inv = op_inverse(L, floor=(-4,))
        assert inv.coefficient((-1,)).terms == {(1,): 1}
        assert inv.coefficient((-2,)).terms == {(2,): 1}
        assert inv.is_e_type()
        assert op_agrees(op_mul(L, inv, floor=(-4,)), PsdOp.identity(1))

    @given(operators(1))
    def test_inverse_window_is_sound(self, M):
        """Test a deeper inverse agrees with a shallower one"""
        L = op_add(PsdOp.d(1, 0, 3), M)
        assert op_agrees(op_inverse(L, floor=(-5,)), op_inverse(L, floor=(-8,)))

    @given(operators(1))
    def test_root_window_is_sound(self, M):
        """Test square roots on two floors agree with each other and with the root"""
        root = op_add(PsdOp.d(1, 0, 3), M)
        L = op_pow(root, 2)
        shallow = op_root(L, 2, floor=(-4,))
        deep = op_root(L, 2, floor=(-7,))
        assert op_agrees(shallow, deep)
        assert op_agrees(deep, root)


class TestResidueAndPairing:
    """Test cases for residues and the pairing"""

    def test_residue(self):
        """Test res(x^-1 d^-1 + x^-2 d^-1) = 1"""
        L = PsdOp.make(1, {(-1,): XSeries.make(1, {(-1,): 1, (-2,): 1}, taylor=False)})
        assert op_residue(L) == 1

    def test_residue_needs_floor(self):
        """Test the residue is unknown above the floor"""
        L = PsdOp.make(1, {(0,): laurent(1, (-1,))}).with_floor((0,))
        with pytest.raises(WindowTooSmall):
            op_residue(L)

    def test_dual_basis(self):
        """Test d^(-1-beta) x^(-1-alpha) is dual to x^alpha d^beta"""
        dual = dual_monomial((2,), (1,), (-4,))
        assert op_pair(PsdOp.monomial(1, (2,), (1,)), dual) == 1
        assert op_pair(PsdOp.monomial(1, (1,), (1,)), dual) == 0

    def test_tuple_pairing(self):
        """Test slotwise pairing"""
        A = OpTuple((PsdOp.make(1, {(-1,): laurent(1, (-1,))}),))
        B = OpTuple((PsdOp.identity(1),))
        assert tuple_pair(A, B) == 1

    @given(operators(1, laurent=True), operators(1, laurent=True))
    def test_pairing_symmetric(self, L, M):
        """Test <L, M> = <M, L>"""
        assert op_pair(L, M) == op_pair(M, L)

    @given(operators(1, laurent=True), operators(1, laurent=True))
    def test_commutator_has_no_residue(self, L, M):
        """Test res [L, M] = 0"""
        assert op_residue(op_commutator(L, M, floor=(-1,))) == 0

    @given(operators(1, laurent=True), operators(1, laurent=True))
    def test_residue_window_is_sound(self, L, M):
        """Test the residue does not depend on how deep the product is taken"""
        assert op_residue(op_mul(L, M, floor=(-1,))) == op_residue(op_mul(L, M, floor=(-4,)))
