"""
Operator Expressions
====================
Tokenizer, recursive-descent parser, evaluator and canonical printer for the
operator expression language used on the command line:

    expr     := term (("+" | "-") term)*
    term     := factor ("*" factor)*
    factor   := "-"? atom ("^" int)?
    atom     := rational | ident | "(" expr ")"
    ident    := ("x" | "d") positive-int
    rational := int ("/" positive-int)?

``*`` is the noncommutative operator product, so ``d1*x1`` evaluates to
``x1*d1 + 1``.
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple, Union

from models.errors import (
    ExponentOverflow,
    ExpressionSyntaxError,
    UnknownVariable,
    ZeroOperator,
)
from models.psdo import PsdOp, lex_key, op_add, op_mul, op_neg, op_pow, op_scale, op_sub
from models.series import XSeries

logger = logging.getLogger(__name__)

TOKEN_SPEC = [
    ("NUMBER", r"\d+"),
    ("IDENT", r"[xd]\d+"),
    ("OP", r"[-+*^/()]"),
    ("NEWLINE", r"\n"),
    ("SKIP", r"[ \t\r]+"),
    ("MISMATCH", r"."),
]
TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_SPEC))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(src: str) -> Iterator[Token]:
    """Yield tokens with 1-based line/column positions, ending with an EOF token."""
    line, line_start = 1, 0
    for match in TOKEN_RE.finditer(src):
        kind = match.lastgroup
        text = match.group()
        column = match.start() - line_start + 1
        if kind == "NEWLINE":
            line += 1
            line_start = match.end()
            continue
        if kind == "SKIP":
            continue
        if kind == "MISMATCH":
            raise ExpressionSyntaxError(f"unexpected character {text!r}", line, column)
        yield Token(kind, text, line, column)
    yield Token("EOF", "", line, len(src) - line_start + 1)


# AST


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "d"
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Ast"


@dataclass(frozen=True)
class Add:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Sub:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Mul:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Pow:
    base: "Ast"
    exponent: int


Ast = Union[Num, Var, Neg, Add, Sub, Mul, Pow]


class Parser:
    """Recursive descent over the token stream; one method per grammar rule."""

    def __init__(self, src: str, n: int, max_exponent: int):
        self.tokens: List[Token] = list(tokenize(src))
        self.pos = 0
        self.n = n
        self.max_exponent = max_exponent

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.current
        self.pos += 1
        return token

    def accept(self, text: str) -> Optional[Token]:
        if self.current.kind == "OP" and self.current.text == text:
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        token = self.accept(text)
        if token is None:
            self.fail(f"expected {text!r}")
        return token

    def fail(self, message: str, token: Token = None):
        token = token or self.current
        found = "end of input" if token.kind == "EOF" else repr(token.text)
        raise ExpressionSyntaxError(f"{message}, found {found}", token.line, token.column)

    def parse(self) -> Ast:
        if self.current.kind == "EOF":
            self.fail("empty expression")
        tree = self.expr()
        if self.current.kind != "EOF":
            self.fail("unexpected token")
        return tree

    def expr(self) -> Ast:
        tree = self.term()
        while True:
            if self.accept("+"):
                tree = Add(tree, self.term())
            elif self.accept("-"):
                tree = Sub(tree, self.term())
            else:
                return tree

    def term(self) -> Ast:
        tree = self.factor()
        while self.accept("*"):
            tree = Mul(tree, self.factor())
        return tree

    def factor(self) -> Ast:
        if self.accept("-"):
            return Neg(self.power())
        return self.power()

    def power(self) -> Ast:
        base = self.atom()
        if self.accept("^"):
            return Pow(base, self.integer())
        return base

    def integer(self) -> int:
        negative = self.accept("-") is not None
        token = self.current
        if token.kind != "NUMBER":
            self.fail("expected an integer exponent")
        self.advance()
        value = -int(token.text) if negative else int(token.text)
        if abs(value) > self.max_exponent:
            raise ExponentOverflow(
                f"exponent {value} exceeds {self.max_exponent} at line {token.line}, "
                f"column {token.column}"
            )
        return value

    def atom(self) -> Ast:
        token = self.current
        if token.kind == "NUMBER":
            self.advance()
            value = Fraction(int(token.text))
            if self.accept("/"):
                denominator = self.current
                if denominator.kind != "NUMBER" or int(denominator.text) == 0:
                    self.fail("expected a positive denominator")
                self.advance()
                value /= int(denominator.text)
            return Num(value)
        if token.kind == "IDENT":
            self.advance()
            index = int(token.text[1:])
            if index < 1:
                self.fail("variable indices start at 1", token)
            if index > self.n:
                raise UnknownVariable(
                    f"{token.text} at line {token.line}, column {token.column} "
                    f"(only {self.n} variables)"
                )
            return Var(token.text[0], index)
        if self.accept("("):
            tree = self.expr()
            self.expect(")")
            return tree
        self.fail("expected a number, variable or '('")


def parse_operator(src: str, cfg) -> Ast:
    """
    Parse an operator expression for ``cfg.n`` variables.

    Raises:
        ExpressionSyntaxError: malformed input, with line and column
        UnknownVariable: an index above n
        ExponentOverflow: an exponent beyond ``cfg.max_exponent``
    """
    return Parser(src, cfg.n, cfg.max_exponent).parse()


# Evaluation


def _literal_floor(tree: Ast, n: int) -> List[int]:
    """Lowest literal d_i exponent written in the expression, per variable."""
    lows = [0] * n
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Pow):
            if isinstance(node.base, Var) and node.base.kind == "d":
                i = node.base.index - 1
                lows[i] = min(lows[i], node.exponent)
            stack.append(node.base)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, (Add, Sub, Mul)):
            stack.extend((node.left, node.right))
    return lows


def evaluation_floor(tree: Ast, cfg) -> Tuple[int, ...]:
    """The configured d-floor, lowered to reach every literal d-exponent."""
    lows = _literal_floor(tree, cfg.n)
    return tuple(min(f, low) for f, low in zip(cfg.dfloor, lows))


def eval_ast(tree: Ast, cfg, floor=None) -> PsdOp:
    """
    Evaluate an expression tree to an operator.

    Products are Leibniz products truncated at the evaluation floor; negative
    powers of compound expressions go through the operator inverse with the
    configured x-degree caps.
    """
    n = cfg.n
    floor = tuple(floor) if floor is not None else evaluation_floor(tree, cfg)
    xcap = tuple(cfg.xmax)

    def walk(node: Ast) -> PsdOp:
        if isinstance(node, Num):
            return op_scale(PsdOp.identity(n), node.value)
        if isinstance(node, Var):
            return _generator(n, node, 1)
        if isinstance(node, Neg):
            return op_neg(walk(node.operand))
        if isinstance(node, Add):
            return op_add(walk(node.left), walk(node.right))
        if isinstance(node, Sub):
            return op_sub(walk(node.left), walk(node.right))
        if isinstance(node, Mul):
            return op_mul(walk(node.left), walk(node.right), floor=floor)
        if isinstance(node, Pow):
            if isinstance(node.base, Var):
                return _generator(n, node.base, node.exponent)
            if isinstance(node.base, Num):
                if node.base.value == 0 and node.exponent < 0:
                    raise ZeroOperator("negative power of zero")
                return op_scale(PsdOp.identity(n), node.base.value ** node.exponent)
            return op_pow(walk(node.base), node.exponent, floor=floor, xcap=xcap)
        raise TypeError(f"not an expression node: {node!r}")

    return walk(tree)


def _generator(n: int, var: Var, power: int) -> PsdOp:
    i = var.index - 1
    if var.kind == "d":
        return PsdOp.d(n, i, power)
    exps = tuple(power if j == i else 0 for j in range(n))
    return PsdOp.scalar(XSeries.monomial(n, exps))


def evaluate(src: str, cfg) -> PsdOp:
    """Parse and evaluate in one step; the result carries the evaluation floor."""
    tree = parse_operator(src, cfg)
    floor = evaluation_floor(tree, cfg)
    result = eval_ast(tree, cfg, floor).with_floor(floor)
    logger.debug("evaluated %r to %d terms", src, result.term_count())
    return result


# Printing


def format_fraction(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _power(name: str, e: int) -> str:
    return name if e == 1 else f"{name}^{e}"


def canonical_terms(L: PsdOp):
    """Stored terms in canonical order: d descending (d_n first), then x and aux ascending."""
    terms = list(L.terms())
    terms.sort(key=lambda t: (lex_key(t[0]), t[2]))
    terms.sort(key=lambda t: lex_key(t[1]), reverse=True)
    return terms


def format_term(xexp, dexp, auxexp, coeff: Fraction, aux_names=(), d_name="d") -> str:
    """One signed monomial, e.g. ``-3/2*x1^2*d1^-1``."""
    factors = [_power(f"x{i + 1}", e) for i, e in enumerate(xexp) if e != 0]
    factors += [_power(name, e) for name, e in zip(aux_names, auxexp) if e != 0]
    factors += [_power(f"{d_name}{i + 1}", e) for i, e in enumerate(dexp) if e != 0]
    magnitude = abs(coeff)
    if not factors:
        body = format_fraction(magnitude)
    elif magnitude == 1:
        body = "*".join(factors)
    else:
        body = "*".join([format_fraction(magnitude)] + factors)
    return body if coeff > 0 else f"-{body}"


def format_operator(L: PsdOp, cfg=None, d_name: str = "d") -> str:
    """
    Canonical text of the stored terms; ``parse(format(L))`` gives back L on
    its known region.
    """
    names = [p.name for p in L.aux]
    pieces = []
    for xexp, dexp, auxexp, coeff in canonical_terms(L):
        text = format_term(xexp, dexp, auxexp, coeff, names, d_name)
        if not pieces:
            pieces.append(text)
        elif text.startswith("-"):
            pieces.append(f"- {text[1:]}")
        else:
            pieces.append(f"+ {text}")
    return " ".join(pieces) if pieces else "0"
