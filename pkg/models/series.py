"""
Truncated Iterated Laurent Series
=================================
Exact coefficient arithmetic in k((x_1))...((x_n)) and k[[x_1, ..., x_n]] over the
rationals, at finite precision.

A series stores a sparse table from exponent keys to ``Fraction`` coefficients
together with a box: ``lo`` is a true lower bound of the x-support, ``hi`` the
exactness bound (coefficients with some x_i-exponent above ``hi[i]`` are
unknown; ``inf`` means exact). Auxiliary nilpotent parameters (dual-number
epsilon, formal times) are appended to every key after the n x-exponents and
truncated at their caps.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Mapping, Sequence, Tuple, Union

from sympy import integer_nthroot

from config.config import PERFORMANCE_CONFIG
from models.errors import (
    CoefficientNotAPower,
    DimensionMismatch,
    ExponentNotDivisible,
    NotAUnit,
    ResidueObstruction,
    WindowTooSmall,
    ZeroSeries,
)

logger = logging.getLogger(__name__)

INF = math.inf

Bound = Union[int, float]
Key = Tuple[int, ...]


def add_bound(a: Bound, b: Bound) -> Bound:
    """Sum of bounds where -inf absorbs (an exact side contributes nothing unknown)."""
    if a == -INF or b == -INF:
        return -INF
    return a + b


def deriv_lo(lo: Bound, k: Bound) -> Bound:
    """Lower support bound after k derivatives: nonnegative exponents die at zero."""
    if k == 0:
        return lo
    if lo >= 0:
        return max(lo - k, 0)
    return lo - k


def binomial(r, k: int) -> Fraction:
    """
    Generalized binomial coefficient r(r-1)...(r-k+1)/k!.

    Args:
        r: integer or Fraction, possibly negative
        k (int): nonnegative integer

    Returns:
        Fraction: the coefficient
    """
    result = Fraction(1)
    for j in range(k):
        result = result * (Fraction(r) - j) / (j + 1)
    return result


def falling_factorial(r: int, k: int) -> int:
    result = 1
    for j in range(k):
        result *= r - j
    return result


def rational_root(c: Fraction, m: int) -> Fraction:
    """
    Principal rational m-th root.

    Raises:
        CoefficientNotAPower: c has no rational m-th root
    """
    c = Fraction(c)
    if c == 0:
        return Fraction(0)
    if c < 0 and m % 2 == 0:
        raise CoefficientNotAPower(f"{c} has no real {m}-th root")
    num, num_exact = integer_nthroot(abs(c.numerator), m)
    den, den_exact = integer_nthroot(c.denominator, m)
    if not (num_exact and den_exact):
        raise CoefficientNotAPower(f"{c} is not an {m}-th power in the rationals")
    root = Fraction(int(num), int(den))
    return -root if c < 0 else root


@dataclass(frozen=True)
class AuxParam:
    """Nilpotent parameter: powers above ``cap`` vanish."""

    name: str
    cap: int


@dataclass(frozen=True)
class XSeries:
    nvars: int
    terms: Mapping[Key, Fraction]
    taylor: Tuple[bool, ...]
    lo: Tuple[Bound, ...]
    hi: Tuple[Bound, ...]
    aux: Tuple[AuxParam, ...] = ()

    def __post_init__(self):
        n = self.nvars
        if not (len(self.taylor) == len(self.lo) == len(self.hi) == n):
            raise DimensionMismatch(f"box of a series in {n} variables has wrong length")
        caps = [p.cap for p in self.aux]
        width = n + len(caps)
        cleaned = {}
        for key, coeff in self.terms.items():
            key = tuple(key)
            if len(key) != width:
                raise DimensionMismatch(f"key {key} does not have {width} entries")
            if any(key[n + j] > caps[j] for j in range(len(caps))):
                continue
            if any(key[i] > self.hi[i] for i in range(n)):
                continue
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            for i in range(n):
                if key[i] < self.lo[i]:
                    raise ValueError(f"exponent {key} lies below the support bound {self.lo}")
            cleaned[key] = coeff
        for i in range(n):
            if self.taylor[i] and self.lo[i] < 0:
                raise ValueError("Taylor-mode variables need a nonnegative lower bound")
        object.__setattr__(self, "terms", cleaned)

    # Construction

    @classmethod
    def make(cls, nvars, terms=None, taylor=False, lo=None, hi=None, aux=()):
        """
        Build a series, filling in default box values.

        Args:
            nvars (int): number of x-variables
            terms (dict): key -> coefficient; keys carry n x-exponents followed
                by one degree per auxiliary parameter
            taylor (bool or tuple): Taylor-mode flag(s)
            lo (tuple, optional): support lower bound; computed when omitted
            hi (tuple, optional): exactness bound; exact when omitted
            aux (tuple): auxiliary parameters

        Returns:
            XSeries: the series
        """
        terms = {tuple(k): Fraction(v) for k, v in (terms or {}).items() if v != 0}
        if isinstance(taylor, bool):
            taylor = (taylor,) * nvars
        if hi is None:
            hi = (INF,) * nvars
        if lo is None:
            lo = []
            for i in range(nvars):
                if taylor[i]:
                    lo.append(0)
                else:
                    lo.append(min((k[i] for k in terms), default=0))
        return cls(nvars, terms, tuple(taylor), tuple(lo), tuple(hi), tuple(aux))

    @classmethod
    def zero(cls, nvars, taylor=False, aux=()):
        return cls.make(nvars, {}, taylor=taylor, aux=aux)

    @classmethod
    def constant(cls, nvars, value, taylor=False, aux=()):
        key = (0,) * (nvars + len(aux))
        return cls.make(nvars, {key: value}, taylor=taylor, aux=aux)

    @classmethod
    def monomial(cls, nvars, exps, value=1, taylor=None, aux=(), auxexps=None):
        exps = tuple(exps)
        if taylor is None:
            taylor = all(e >= 0 for e in exps)
        auxexps = tuple(auxexps) if auxexps else (0,) * len(aux)
        return cls.make(nvars, {exps + auxexps: value}, taylor=taylor, aux=aux)

    @classmethod
    def variable(cls, nvars, i, taylor=True):
        exps = tuple(1 if j == i else 0 for j in range(nvars))
        return cls.make(nvars, {exps: 1}, taylor=taylor)

    # Introspection

    @property
    def naux(self) -> int:
        return len(self.aux)

    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        return all(h == INF for h in self.hi)

    def aux_index(self, name: str) -> int:
        for j, param in enumerate(self.aux):
            if param.name == name:
                return j
        raise KeyError(name)

    def coefficient(self, xexp, auxexp=None) -> Fraction:
        auxexp = tuple(auxexp) if auxexp is not None else (0,) * self.naux
        return self.terms.get(tuple(xexp) + auxexp, Fraction(0))

    def x_free(self) -> bool:
        """True when every stored term is constant in x (auxiliary degrees allowed)."""
        return all(all(e == 0 for e in key[: self.nvars]) for key in self.terms)

    def aux_constant_part(self) -> "XSeries":
        """The part of degree zero in every auxiliary parameter."""
        n = self.nvars
        terms = {k: c for k, c in self.terms.items() if not any(k[n:])}
        return self._like(terms)

    def is_aux_constant(self) -> bool:
        n = self.nvars
        return all(not any(k[n:]) for k in self.terms)

    def max_degree(self, i: int) -> Bound:
        return max((k[i] for k in self.terms), default=-INF)

    def _like(self, terms, lo=None, hi=None, taylor=None, aux=None) -> "XSeries":
        return XSeries(
            self.nvars,
            terms,
            self.taylor if taylor is None else tuple(taylor),
            self.lo if lo is None else tuple(lo),
            self.hi if hi is None else tuple(hi),
            self.aux if aux is None else tuple(aux),
        )

    # Auxiliary-parameter alignment

    def with_aux(self, aux: Sequence[AuxParam]) -> "XSeries":
        """Re-key onto a (super)set of auxiliary parameters with the given caps."""
        aux = tuple(aux)
        if aux == self.aux:
            return self
        n = self.nvars
        old = {p.name: j for j, p in enumerate(self.aux)}
        for name in old:
            if name not in {p.name for p in aux}:
                raise DimensionMismatch(f"auxiliary parameter {name} would be lost")
        terms = {}
        for key, coeff in self.terms.items():
            degrees = tuple(key[n + old[p.name]] if p.name in old else 0 for p in aux)
            terms[key[:n] + degrees] = coeff
        return self._like(terms, aux=aux)

    def without_aux(self) -> "XSeries":
        """Drop every auxiliary parameter, keeping the degree-zero part."""
        n = self.nvars
        terms = {k[:n]: c for k, c in self.terms.items() if not any(k[n:])}
        return self._like(terms, aux=())

    # Arithmetic

    def __add__(self, other):
        if not isinstance(other, XSeries):
            other = XSeries.constant(self.nvars, other, taylor=self.taylor, aux=self.aux)
        return xs_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, XSeries):
            return xs_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c) -> "XSeries":
        c = Fraction(c)
        return self._like({k: v * c for k, v in self.terms.items()})

    def deriv(self, i: int) -> "XSeries":
        return xs_deriv(self, i)

    def deriv_multi(self, ks: Sequence[int]) -> "XSeries":
        result = self
        for i, k in enumerate(ks):
            for _ in range(k):
                result = xs_deriv(result, i)
                if result.is_zero() and result.is_exact():
                    return result
        return result

    def antideriv(self, i: int) -> "XSeries":
        return xs_antideriv(self, i)

    def leading(self):
        return xs_leading(self)

    def inverse(self, cap=None) -> "XSeries":
        return xs_inverse(self, cap)

    def root(self, m: int, cap=None) -> "XSeries":
        return xs_root(self, m, cap)

    def residue(self) -> Fraction:
        return xs_residue(self)

    def split_x(self, i: int, threshold: int = 1):
        return xs_split_x(self, i, threshold)

    # Windows

    def restrict_hi(self, hi: Sequence[Bound]) -> "XSeries":
        hi = tuple(min(a, b) for a, b in zip(self.hi, hi))
        return self._like(self.terms, hi=hi)

    def reboxed(self, lo, hi, taylor) -> "XSeries":
        """Place the series in a (narrower) box; terms above ``hi`` are dropped."""
        return self._like(self.terms, lo=lo, hi=hi, taylor=taylor)

    def agrees_with(self, other: "XSeries") -> bool:
        """Exact equality of every coefficient inside both boxes."""
        a, b, _ = _align(self, other)
        hi = tuple(min(x, y) for x, y in zip(a.hi, b.hi))
        keys = set(a.terms) | set(b.terms)
        for key in keys:
            if any(key[i] > hi[i] for i in range(a.nvars)):
                continue
            if a.terms.get(key, 0) != b.terms.get(key, 0):
                return False
        return True

    # Formal time calculus

    def aux_integrate(self, name: str) -> "XSeries":
        return xs_aux_integrate(self, name)

    def aux_deriv(self, name: str) -> "XSeries":
        return xs_aux_deriv(self, name)

    def truncate_aux(self, name: str, cap: int) -> "XSeries":
        j = self.aux_index(name)
        aux = list(self.aux)
        aux[j] = AuxParam(name, min(cap, aux[j].cap))
        return self._like(self.terms, aux=aux)


def _check_dims(a: XSeries, b: XSeries):
    if a.nvars != b.nvars:
        raise DimensionMismatch(f"series in {a.nvars} and {b.nvars} variables")


def merge_aux(first: Sequence[AuxParam], second: Sequence[AuxParam]) -> Tuple[AuxParam, ...]:
    """Union of parameter lists in first-seen order; shared parameters take the smaller cap."""
    caps = {}
    order = []
    for param in list(first) + list(second):
        if param.name in caps:
            caps[param.name] = min(caps[param.name], param.cap)
        else:
            caps[param.name] = param.cap
            order.append(param.name)
    return tuple(AuxParam(name, caps[name]) for name in order)


def _align(a: XSeries, b: XSeries):
    _check_dims(a, b)
    if a.aux == b.aux:
        return a, b, a.aux
    aux = merge_aux(a.aux, b.aux)
    return a.with_aux(aux), b.with_aux(aux), aux


def xs_add(a: XSeries, b: XSeries) -> XSeries:
    """
    Coefficientwise sum on the intersection of the boxes.

    Raises:
        DimensionMismatch: different variable counts
    """
    a, b, aux = _align(a, b)
    terms = dict(a.terms)
    for key, coeff in b.terms.items():
        terms[key] = terms.get(key, 0) + coeff
    n = a.nvars
    return XSeries(
        n,
        terms,
        tuple(x and y for x, y in zip(a.taylor, b.taylor)),
        tuple(min(x, y) for x, y in zip(a.lo, b.lo)),
        tuple(min(x, y) for x, y in zip(a.hi, b.hi)),
        aux,
    )


def product_box(a: XSeries, b: XSeries):
    """Support bound and exactness bound of a product of two boxed series."""
    lo = tuple(x + y for x, y in zip(a.lo, b.lo))
    hi = tuple(
        min(ha + lb, hb + la) for ha, hb, la, lb in zip(a.hi, b.hi, a.lo, b.lo)
    )
    return lo, hi


def xs_mul(a: XSeries, b: XSeries) -> XSeries:
    """Truncated Cauchy product; unknown high-degree terms pollute only above the product box."""
    a, b, aux = _align(a, b)
    n = a.nvars
    lo, hi = product_box(a, b)
    caps = [p.cap for p in aux]
    terms: Dict[Key, Fraction] = {}
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            key = tuple(x + y for x, y in zip(ka, kb))
            if any(key[n + j] > caps[j] for j in range(len(caps))):
                continue
            if any(key[i] > hi[i] for i in range(n)):
                continue
            terms[key] = terms.get(key, 0) + ca * cb
    taylor = tuple(x and y for x, y in zip(a.taylor, b.taylor))
    return XSeries(n, terms, taylor, lo, hi, aux)


def xs_deriv(a: XSeries, i: int) -> XSeries:
    """d/dx_i (0-based index); the exactness bound in x_i drops by one."""
    terms = {}
    for key, coeff in a.terms.items():
        e = key[i]
        if e == 0:
            continue
        new = list(key)
        new[i] = e - 1
        terms[tuple(new)] = coeff * e
    lo = list(a.lo)
    lo[i] = deriv_lo(lo[i], 1)
    hi = list(a.hi)
    hi[i] = hi[i] - 1
    return a._like(terms, lo=lo, hi=hi)


def xs_antideriv(a: XSeries, i: int) -> XSeries:
    """
    Antiderivative in x_i with integration constant 0.

    Raises:
        ResidueObstruction: an x_i^-1 term is present
    """
    terms = {}
    for key, coeff in a.terms.items():
        e = key[i]
        if e == -1:
            raise ResidueObstruction(f"x{i + 1}^-1 term {key} cannot be integrated")
        new = list(key)
        new[i] = e + 1
        terms[tuple(new)] = coeff / (e + 1)
    lo = list(a.lo)
    lo[i] = lo[i] + 1
    hi = list(a.hi)
    hi[i] = hi[i] + 1
    return a._like(terms, lo=lo, hi=hi)


def _valuation_key(xexp: Sequence[int]):
    # x_n is the most significant variable
    return tuple(reversed(tuple(xexp)))


def xs_leading(a: XSeries):
    """
    Leading term in the iterated-Laurent order (x_n most significant).

    Auxiliary parameters are nilpotent, so only the degree-zero part counts.

    Returns:
        tuple: (exponent vector, coefficient)

    Raises:
        ZeroSeries: no term of auxiliary degree zero
    """
    n = a.nvars
    base = [(k[:n], c) for k, c in a.terms.items() if not any(k[n:])]
    if not base:
        raise ZeroSeries("series has no invertible part")
    xexp, coeff = min(base, key=lambda item: _valuation_key(item[0]))
    return tuple(xexp), coeff


def _factor_bound(base, neg, ghi, nilpotent_budget: int) -> int:
    """
    Most factors of g a product can have and still land in the box ``ghi``.

    Every base key of g has a positive last nonzero exponent (its pivot).
    Factors pivoting at x_i raise that exponent by at least one, while factors
    pivoting higher (and nilpotent ones) lower it by at most ``neg[i]``.
    """
    n = len(ghi)
    pivots = set()
    for key in base:
        pivots.add(max(i for i in range(n) if key[i] != 0))
    budget = nilpotent_budget
    for i in reversed(range(n)):
        if i not in pivots:
            continue
        if ghi[i] == INF:
            raise WindowTooSmall(f"an x{i + 1}-degree cap is required for this expansion")
        budget += max(0, int(ghi[i] + neg[i] * budget))
    return budget


def _expand_normalized(a: XSeries, cap, coeff_of: Callable[[int], Fraction], shift, scale):
    """
    Evaluate sum_k coeff_of(k) g^k where a = c0 x^lead (1 + g), then multiply by
    scale * x^shift. Shared by inverse (coeff_of(k) = (-1)^k) and roots (binomial).

    g may mix signs across variables (1/(x1 + x2) = x1^-1 (1 + x2/x1)^-1); the
    sum stays finite inside the box because g has positive iterated order.
    """
    n = a.nvars
    naux = a.naux
    lead, c0 = xs_leading(a)
    unit = (0,) * (n + naux)

    known = [h - e for h, e in zip(a.hi, lead)]
    ghi = list(known)
    if cap is not None:
        cap = tuple(cap) if isinstance(cap, (list, tuple)) else (cap,) * n
        ghi = [min(g, c - e) for g, c, e in zip(ghi, cap, lead)]

    tail: Dict[Key, Fraction] = {}
    for key, coeff in a.terms.items():
        k = tuple(key[i] - lead[i] for i in range(n)) + key[n:]
        tail[k] = tail.get(k, 0) + coeff / c0
    tail[unit] = tail.get(unit, 0) - 1
    tail = {k: c for k, c in tail.items() if c != 0}

    base = [k for k in tail if not any(k[n:])]
    neg = [max([0] + [-k[i] for k in tail]) for i in range(n)]
    caps = [p.cap for p in a.aux]
    # an unknown term of a is one more factor of g
    inexact = any(h != INF for h in a.hi)
    nfactors = _factor_bound(base, neg, ghi, sum(caps) + int(inexact))

    def reachable(key, used):
        if any(key[n + j] > caps[j] for j in range(naux)):
            return False
        return all(key[i] - neg[i] * (nfactors - used) <= ghi[i] for i in range(n))

    tail = {k: c for k, c in tail.items() if reachable(k, 1)}
    total: Dict[Key, Fraction] = {}
    power: Dict[Key, Fraction] = {unit: Fraction(1)}
    max_steps = PERFORMANCE_CONFIG["max_series_steps"]
    k = 0
    while power:
        ck = coeff_of(k)
        if ck != 0:
            for key, coeff in power.items():
                if all(key[i] <= ghi[i] for i in range(n)):
                    total[key] = total.get(key, 0) + ck * coeff
        if k >= nfactors:
            break
        nxt: Dict[Key, Fraction] = {}
        for kp, cp in power.items():
            for kt, ct in tail.items():
                key = tuple(x + y for x, y in zip(kp, kt))
                if reachable(key, k + 1):
                    nxt[key] = nxt.get(key, 0) + cp * ct
        power = {key: c for key, c in nxt.items() if c != 0}
        k += 1
        if k > max_steps:
            raise WindowTooSmall(f"series expansion did not terminate in {max_steps} steps")
    logger.debug("normalized expansion used %d powers", k)

    exact_hi = [
        g if h == INF or neg[i] == 0 else min(g, h - neg[i] * nfactors)
        for i, (g, h) in enumerate(zip(ghi, known))
    ]
    hi_out = tuple(shift[i] + exact_hi[i] for i in range(n))
    terms = {}
    for key, coeff in total.items():
        if coeff == 0 or any(key[i] > exact_hi[i] for i in range(n)):
            continue
        terms[tuple(key[i] + shift[i] for i in range(n)) + key[n:]] = coeff * scale
    lo_out = tuple(min((key[i] for key in terms), default=shift[i]) for i in range(n))
    taylor = tuple(t and lo >= 0 for t, lo in zip(a.taylor, lo_out))
    lo_out = tuple(max(lo, 0) if t else lo for t, lo in zip(taylor, lo_out))
    return XSeries(n, terms, taylor, lo_out, hi_out, a.aux)


def xs_inverse(a: XSeries, cap=None) -> XSeries:
    """
    Multiplicative inverse by the geometric series on a = m(1 + g).

    Args:
        a (XSeries): nonzero series
        cap (int or tuple, optional): x-degree cap used when ``a`` is exact but
            the inverse is an infinite series

    Raises:
        ZeroSeries: a has no invertible part
        NotAUnit: Taylor mode with zero constant term
        WindowTooSmall: the expansion needs an x-degree cap
    """
    if a.is_zero():
        raise ZeroSeries("cannot invert the zero series")
    n = a.nvars
    if all(a.taylor) and a.coefficient((0,) * n) == 0:
        raise NotAUnit("constant term is zero in k[[x]]")
    lead, c0 = xs_leading(a)
    shift = tuple(-e for e in lead)
    return _expand_normalized(a, cap, lambda k: Fraction((-1) ** k), shift, 1 / c0)


def xs_root(a: XSeries, m: int, cap=None) -> XSeries:
    """
    Principal m-th root by the binomial series on (1 + g)^(1/m).

    Raises:
        ExponentNotDivisible: the leading exponent is not divisible by m
        CoefficientNotAPower: the leading coefficient has no rational m-th root
    """
    if m < 1:
        raise ValueError("root index must be positive")
    if a.is_zero():
        raise ZeroSeries("root of the zero series")
    lead, c0 = xs_leading(a)
    if any(e % m for e in lead):
        raise ExponentNotDivisible(f"leading exponent {lead} is not divisible by {m}")
    scale = rational_root(c0, m)
    shift = tuple(e // m for e in lead)
    r = Fraction(1, m)
    return _expand_normalized(a, cap, lambda k: binomial(r, k), shift, scale)


def xs_residue(a: XSeries) -> Fraction:
    """
    Coefficient of x_1^-1 ... x_n^-1 (auxiliary degree zero).

    Raises:
        WindowTooSmall: the exponent (-1, ..., -1) lies outside the box
    """
    n = a.nvars
    if any(h < -1 for h in a.hi):
        raise WindowTooSmall("residue exponent lies above the exactness bound")
    return a.coefficient((-1,) * n)


def xs_residue_series(a: XSeries) -> XSeries:
    """Residue keeping the auxiliary parameters: a series in zero x-variables."""
    n = a.nvars
    if any(h < -1 for h in a.hi):
        raise WindowTooSmall("residue exponent lies above the exactness bound")
    target = (-1,) * n
    terms = {k[n:]: c for k, c in a.terms.items() if k[:n] == target}
    return XSeries(0, terms, (), (), (), a.aux)


def xs_split_x(a: XSeries, i: int, threshold: int = 1):
    """
    Split by x_i-exponent: (part with exponent >= threshold, the rest).

    threshold 1 gives x k[[x]] + k[x^-1]; threshold 0 gives k[[x]] + x^-1 k[x^-1].
    """
    upper = {k: c for k, c in a.terms.items() if k[i] >= threshold}
    lower = {k: c for k, c in a.terms.items() if k[i] < threshold}
    return a._like(upper), a._like(lower)


def xs_aux_integrate(a: XSeries, name: str) -> XSeries:
    """Integral from 0 in the auxiliary parameter; terms above the cap vanish."""
    j = a.nvars + a.aux_index(name)
    terms = {}
    for key, coeff in a.terms.items():
        new = list(key)
        new[j] += 1
        terms[tuple(new)] = coeff / new[j]
    return a._like(terms)


def xs_aux_deriv(a: XSeries, name: str) -> XSeries:
    j = a.nvars + a.aux_index(name)
    terms = {}
    for key, coeff in a.terms.items():
        if key[j] == 0:
            continue
        new = list(key)
        new[j] -= 1
        terms[tuple(new)] = coeff * key[j]
    return a._like(terms)


def xs_truncate_aux(a: XSeries, name: str, cap: int) -> XSeries:
    """Drop powers of the auxiliary parameter above ``cap``."""
    aux = tuple(p if p.name != name else AuxParam(name, min(cap, p.cap)) for p in a.aux)
    return a.with_aux(aux)
