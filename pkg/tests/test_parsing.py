"""
Unit tests for the operator expression language
===============================================
"""

import os
import random
import sys
from fractions import Fraction

import pytest

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from config.config import SessionConfig
from models.errors import ExponentOverflow, ExpressionSyntaxError, UnknownVariable, ZeroOperator
from models.psdo import PsdOp, op_coefficient
from utils.checks import check_roundtrip
from utils.parsing import (
    Add,
    Mul,
    Neg,
    Num,
    Pow,
    Sub,
    Var,
    evaluate,
    evaluation_floor,
    format_operator,
    parse_operator,
    tokenize,
)


class TestParser:
    """Test cases for tokenizing and parsing"""

    def setup_method(self):
        """Setup for each test method"""
        self.cfg = SessionConfig(n=2, xmax=(4,), dfloor=(-4,))

    def test_tokens_carry_positions(self):
        """Test line and column bookkeeping"""
        tokens = list(tokenize("d1 +\n x2"))
        assert [t.kind for t in tokens] == ["IDENT", "OP", "IDENT", "EOF"]
        assert (tokens[2].line, tokens[2].column) == (2, 2)

    def test_product_tree(self):
        """Test d1*x1 parses to a product node"""
        assert parse_operator("d1*x1", self.cfg) == Mul(Var("d", 1), Var("x", 1))

    def test_mixed_expression(self):
        """Test powers, products and rationals together"""
        tree = parse_operator("d1^-1 * x1 + 3/2", self.cfg)
        assert tree == Add(Mul(Pow(Var("d", 1), -1), Var("x", 1)), Num(Fraction(3, 2)))

    def test_power_binds_tighter_than_negation(self):
        """Test -d1^2 is -(d1^2)"""
        assert parse_operator("-d1^2", self.cfg) == Neg(Pow(Var("d", 1), 2))

    def test_single_unary_minus(self):
        """Test a factor takes at most one leading minus"""
        assert parse_operator("x1 - -x1", self.cfg) == Sub(Var("x", 1), Neg(Var("x", 1)))
        with pytest.raises(ExpressionSyntaxError) as excinfo:
            parse_operator("--x1", self.cfg)
        assert (excinfo.value.line, excinfo.value.column) == (1, 2)

    def test_syntax_error_position(self):
        """Test malformed input reports line and column"""
        with pytest.raises(ExpressionSyntaxError) as excinfo:
            parse_operator("d1 + * x1", self.cfg)
        assert (excinfo.value.line, excinfo.value.column) == (1, 6)

        with pytest.raises(ExpressionSyntaxError) as excinfo:
            parse_operator("x1 +\n  )", self.cfg)
        assert (excinfo.value.line, excinfo.value.column) == (2, 3)

    def test_bad_character(self):
        """Test characters outside the grammar"""
        with pytest.raises(ExpressionSyntaxError) as excinfo:
            parse_operator("d1 & x1", self.cfg)
        assert excinfo.value.column == 4

    def test_zero_denominator(self):
        """Test 1/0 is rejected while parsing"""
        with pytest.raises(ExpressionSyntaxError):
            parse_operator("1/0", self.cfg)

    def test_empty_and_unbalanced(self):
        """Test empty input and a missing parenthesis"""
        with pytest.raises(ExpressionSyntaxError):
            parse_operator("   ", self.cfg)
        with pytest.raises(ExpressionSyntaxError):
            parse_operator("(d1 + x1", self.cfg)

    def test_unknown_variable(self):
        """Test indices above n"""
        with pytest.raises(UnknownVariable):
            parse_operator("x3", self.cfg)

    def test_exponent_overflow(self):
        """Test exponents beyond the configured maximum"""
        with pytest.raises(ExponentOverflow):
            parse_operator("d1^65", self.cfg)

    def test_usage_errors_exit_with_two(self):
        """Test parse errors map to the usage exit code"""
        assert ExpressionSyntaxError("x").exit_code == 2
        assert UnknownVariable("x").exit_code == 2


class TestEvaluation:
    """Test cases for evaluating and printing expressions"""

    def setup_method(self):
        """Setup for each test method"""
        self.cfg = SessionConfig()

    def test_heisenberg(self):
        """Test d1*x1 evaluates to x1*d1 + 1"""
        assert format_operator(evaluate("d1*x1", self.cfg)) == "x1*d1 + 1"

    def test_square(self):
        """Test (d1 + x1)^2 in canonical order"""
        result = evaluate("(d1 + x1)^2", self.cfg)
        assert format_operator(result) == "d1^2 + 2*x1*d1 + 1 + x1^2"

    def test_zeroth_power(self):
        """Test d1^0 is the identity"""
        assert format_operator(evaluate("d1^0", self.cfg)) == "1"

    def test_commutator_text(self):
        """Test d1*x1 - x1*d1 = 1"""
        assert format_operator(evaluate("d1*x1 - x1*d1", self.cfg)) == "1"

    def test_zero_prints_as_zero(self):
        """Test the empty operator"""
        assert format_operator(PsdOp.zero(1)) == "0"
        assert format_operator(evaluate("x1 - x1", self.cfg)) == "0"

    def test_negative_power_of_zero(self):
        """Test 0^-1 has no meaning"""
        with pytest.raises(ZeroOperator):
            evaluate("0^-1", self.cfg)

    def test_floor_reaches_literals(self):
        """Test the evaluation floor covers written d-exponents"""
        tree = parse_operator("d1^-9", self.cfg)
        assert evaluation_floor(tree, self.cfg) == (-9,)
        L = evaluate("d1^-9", self.cfg)
        assert op_coefficient(L, (0,), (-9,)) == 1

    def test_inverse_of_compound(self):
        """Test (d1 + x1)^-1 starts with d1^-1 - x1*d1^-2"""
        L = evaluate("(d1 + x1)^-1", self.cfg)
        assert op_coefficient(L, (0,), (-1,)) == 1
        assert op_coefficient(L, (1,), (-2,)) == -1

    def test_rational_coefficients(self):
        """Test fractions print as p/q"""
        assert format_operator(evaluate("-3/2*x1^2*d1^-1", self.cfg)) == "-3/2*x1^2*d1^-1"

    def test_two_variable_order(self):
        """Test d2 terms print before d1 terms"""
        cfg = SessionConfig(n=2)
        assert format_operator(evaluate("d1 + d2", cfg)) == "d2 + d1"

    def test_roundtrip(self):
        """Test parse(format(L)) gives back L"""
        for case in range(20):
            rng = random.Random(f"roundtrip:{case}")
            cfg = SessionConfig(n=1 + case % 2, xmax=(4,), dfloor=(-4,))
            assert check_roundtrip(rng, cfg)
