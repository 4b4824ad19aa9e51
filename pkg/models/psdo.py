"""
Pseudo-Differential Operators
=============================
Truncated elements of P = K((d_1^-1))...((d_n^-1)) and of its subring E with
Taylor coefficients, multiplied by the Leibniz rule.

Every operator carries a Window. Its known region is: every d_j-exponent at
or above ``dfloor[j]`` and every x_i-exponent at or below ``xhi[i]``. Outside
that region coefficients are unknown. ``dtop``/``dbot`` bound the d-support
of the true operator and ``xlo`` bounds the x-support of every term in the
known d-range; these drive the truncation of products.
"""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple

from config.config import PERFORMANCE_CONFIG
from models.errors import (
    DimensionMismatch,
    ExponentNotDivisible,
    NotInvertibleInE,
    WindowTooSmall,
    ZeroOperator,
)
from models.series import (
    INF,
    AuxParam,
    Bound,
    Key,
    XSeries,
    add_bound,
    binomial,
    deriv_lo,
    falling_factorial,
    merge_aux,
    xs_residue_series,
)

logger = logging.getLogger(__name__)


def lex_key(dexp: Sequence[Bound]):
    """Sort key for d-exponents: d_n most significant."""
    return tuple(reversed(tuple(dexp)))


@dataclass(frozen=True)
class Window:
    xlo: Tuple[Bound, ...]
    xhi: Tuple[Bound, ...]
    dbot: Tuple[Bound, ...]
    dfloor: Tuple[Bound, ...]
    dtop: Tuple[Bound, ...]
    taylor: Tuple[bool, ...]

    @property
    def n(self) -> int:
        return len(self.xhi)

    @classmethod
    def exact(cls, n, xlo=None, dbot=None, dtop=None, taylor=None):
        return cls(
            tuple(xlo) if xlo is not None else (0,) * n,
            (INF,) * n,
            tuple(dbot) if dbot is not None else (-INF,) * n,
            (-INF,) * n,
            tuple(dtop) if dtop is not None else (-INF,) * n,
            tuple(taylor) if taylor is not None else (True,) * n,
        )

    def is_exact_in_x(self) -> bool:
        return all(h == INF for h in self.xhi)

    def is_exact_in_d(self) -> bool:
        return all(f == -INF for f in self.dfloor)

    def is_e_type(self) -> bool:
        return all(self.taylor)

    def knows(self, xexp, dexp) -> bool:
        return all(d >= f for d, f in zip(dexp, self.dfloor)) and all(
            x <= h for x, h in zip(xexp, self.xhi)
        )

    def to_dict(self) -> Dict:
        def show(values):
            return [None if abs(v) == INF else int(v) for v in values]

        return {
            "xlo": show(self.xlo),
            "xhi": show(self.xhi),
            "dfloor": show(self.dfloor),
            "dtop": show(self.dtop),
            "ring": "E" if self.is_e_type() else "P",
        }


def _sum_window(a: Window, b: Window) -> Window:
    return Window(
        tuple(min(x, y) for x, y in zip(a.xlo, b.xlo)),
        tuple(min(x, y) for x, y in zip(a.xhi, b.xhi)),
        tuple(min(x, y) for x, y in zip(a.dbot, b.dbot)),
        tuple(max(x, y) for x, y in zip(a.dfloor, b.dfloor)),
        tuple(max(x, y) for x, y in zip(a.dtop, b.dtop)),
        tuple(x and y for x, y in zip(a.taylor, b.taylor)),
    )


@dataclass(frozen=True)
class PsdOp:
    """
    Sparse operator sum_d a_d(x) d^d.

    ``coeffs`` maps d-exponent vectors to XSeries coefficients; every
    coefficient is conformed to the window's x-box and to ``aux``.
    """

    n: int
    coeffs: Mapping[Key, XSeries]
    window: Window
    aux: Tuple[AuxParam, ...] = ()

    def __post_init__(self):
        w = self.window
        if w.n != self.n:
            raise DimensionMismatch(f"window for {w.n} variables on an operator in {self.n}")
        # a coefficient known on a smaller box narrows the whole window
        xlo, xhi, taylor = list(w.xlo), list(w.xhi), list(w.taylor)
        for dexp, series in self.coeffs.items():
            if any(d < f for d, f in zip(dexp, w.dfloor)):
                continue
            for i in range(min(self.n, series.nvars)):
                xlo[i] = min(xlo[i], series.lo[i])
                xhi[i] = min(xhi[i], series.hi[i])
                taylor[i] = taylor[i] and series.taylor[i]
        w = replace(w, xlo=tuple(xlo), xhi=tuple(xhi), taylor=tuple(taylor))
        object.__setattr__(self, "window", w)
        conformed = {}
        for dexp, series in self.coeffs.items():
            dexp = tuple(dexp)
            if len(dexp) != self.n or series.nvars != self.n:
                raise DimensionMismatch(f"coefficient at {dexp} has the wrong dimension")
            if any(d < f for d, f in zip(dexp, w.dfloor)):
                continue
            if any(d > t for d, t in zip(dexp, w.dtop)) or any(
                d < b for d, b in zip(dexp, w.dbot)
            ):
                raise ValueError(f"d-exponent {dexp} lies outside the support bounds")
            series = series.with_aux(self.aux).reboxed(w.xlo, w.xhi, w.taylor)
            if not series.is_zero():
                conformed[dexp] = series
        object.__setattr__(self, "coeffs", conformed)
        object.__setattr__(self, "aux", tuple(self.aux))

    # Construction

    @classmethod
    def make(cls, n, coeffs, window=None, aux=None):
        """
        Build an operator from {d-exponent: XSeries or number}.

        Without a window the operator is exact: its bounds are read off the
        stored data.
        """
        table = {}
        for dexp, value in coeffs.items():
            if not isinstance(value, XSeries):
                value = XSeries.constant(n, value, taylor=True)
            table[tuple(dexp)] = value
        if aux is None:
            aux = ()
            for series in table.values():
                aux = merge_aux(aux, series.aux)
        if window is None:
            nonzero = {d: s for d, s in table.items() if not s.is_zero()}
            window = Window(
                tuple(min((s.lo[i] for s in nonzero.values()), default=0) for i in range(n)),
                tuple(min((s.hi[i] for s in nonzero.values()), default=INF) for i in range(n)),
                tuple(min((d[c] for d in nonzero), default=-INF) for c in range(n)),
                (-INF,) * n,
                tuple(max((d[c] for d in nonzero), default=-INF) for c in range(n)),
                tuple(all(s.taylor[i] for s in nonzero.values()) for i in range(n)),
            )
        return cls(n, table, window, tuple(aux))

    @classmethod
    def zero(cls, n, aux=()):
        return cls(n, {}, Window.exact(n), tuple(aux))

    @classmethod
    def identity(cls, n, aux=()):
        return cls.make(n, {(0,) * n: 1}, aux=tuple(aux))

    @classmethod
    def d_power(cls, n, exps, value=1):
        return cls.make(n, {tuple(exps): value})

    @classmethod
    def d(cls, n, i, power=1):
        """The generator d_i^power (0-based index)."""
        return cls.d_power(n, tuple(power if j == i else 0 for j in range(n)))

    @classmethod
    def x(cls, n, i):
        return cls.scalar(XSeries.variable(n, i))

    @classmethod
    def scalar(cls, series: XSeries):
        """Multiplication by a coefficient series."""
        n = series.nvars
        window = Window(
            series.lo, series.hi, (0,) * n, (-INF,) * n, (0,) * n, series.taylor
        )
        return cls(n, {(0,) * n: series}, window, series.aux)

    @classmethod
    def monomial(cls, n, xexp, dexp, value=1):
        return cls.make(n, {tuple(dexp): XSeries.monomial(n, xexp, value)})

    # Introspection

    def is_zero(self) -> bool:
        """No stored term: zero on the known region."""
        return not self.coeffs

    def is_e_type(self) -> bool:
        return self.window.is_e_type()

    def is_exact(self) -> bool:
        return self.window.is_exact_in_x() and self.window.is_exact_in_d()

    def terms(self) -> Iterator[Tuple[Key, Key, Key, Fraction]]:
        """Yield (x-exponents, d-exponents, aux-degrees, coefficient)."""
        n = self.n
        for dexp, series in self.coeffs.items():
            for key, coeff in series.terms.items():
                yield key[:n], dexp, key[n:], coeff

    def coefficient(self, dexp) -> XSeries:
        dexp = tuple(dexp)
        if dexp in self.coeffs:
            return self.coeffs[dexp]
        w = self.window
        return XSeries(self.n, {}, w.taylor, w.xlo, w.xhi, self.aux)

    def term_count(self) -> int:
        return sum(len(s.terms) for s in self.coeffs.values())

    # Window manipulation

    def with_window(self, window: Window) -> "PsdOp":
        return PsdOp(self.n, self.coeffs, window, self.aux)

    def with_floor(self, floor: Sequence[Bound]) -> "PsdOp":
        """Raise the d-floor (drop terms below it)."""
        floor = tuple(max(a, b) for a, b in zip(self.window.dfloor, floor))
        return self.with_window(replace(self.window, dfloor=floor))

    def with_aux(self, aux: Sequence[AuxParam]) -> "PsdOp":
        aux = tuple(aux)
        if aux == self.aux:
            return self
        coeffs = {d: s.with_aux(aux) for d, s in self.coeffs.items()}
        return PsdOp(self.n, coeffs, self.window, aux)

    def map_coefficients(self, fn) -> "PsdOp":
        """Apply a coefficientwise linear map that keeps the x-box."""
        return PsdOp(self.n, {d: fn(s) for d, s in self.coeffs.items()}, self.window, self.aux)

    def aux_integrate(self, name: str) -> "PsdOp":
        return self.map_coefficients(lambda s: s.aux_integrate(name))

    def aux_deriv(self, name: str) -> "PsdOp":
        return self.map_coefficients(lambda s: s.aux_deriv(name))

    def aux_constant_part(self) -> "PsdOp":
        return self.map_coefficients(lambda s: s.aux_constant_part())

    def without_aux(self) -> "PsdOp":
        coeffs = {d: s.without_aux() for d, s in self.coeffs.items()}
        return PsdOp(self.n, coeffs, self.window, ())

    # Operators

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_sub(self, other)

    def __neg__(self):
        return op_neg(self)

    def __mul__(self, other):
        if isinstance(other, PsdOp):
            return op_mul(self, other)
        return op_scale(self, other)

    def __rmul__(self, other):
        return op_scale(self, other)


def _check_dims(L: PsdOp, M: PsdOp):
    if L.n != M.n:
        raise DimensionMismatch(f"operators in {L.n} and {M.n} variables")


def _align(L: PsdOp, M: PsdOp):
    _check_dims(L, M)
    if L.aux == M.aux:
        return L, M
    aux = merge_aux(L.aux, M.aux)
    return L.with_aux(aux), M.with_aux(aux)


def _settle(op: PsdOp) -> PsdOp:
    """Tighten the d-support bounds from stored data where the window allows it."""
    w = op.window
    if not w.is_exact_in_x():
        return op
    n = op.n
    stored = list(op.coeffs)
    if w.is_exact_in_d():
        dtop = tuple(max((d[c] for d in stored), default=-INF) for c in range(n))
        dbot = tuple(min((d[c] for d in stored), default=-INF) for c in range(n))
        if not stored:
            dbot = (-INF,) * n
    elif n == 1:
        dtop = (min(w.dtop[0], max(max((d[0] for d in stored), default=-INF), w.dfloor[0] - 1)),)
        dbot = w.dbot
    else:
        return op
    return op.with_window(replace(w, dtop=dtop, dbot=dbot))


def op_add(L: PsdOp, M: PsdOp) -> PsdOp:
    """
    Coefficientwise sum on the intersection of the windows.

    Raises:
        DimensionMismatch: different variable counts
    """
    L, M = _align(L, M)
    window = _sum_window(L.window, M.window)
    coeffs: Dict[Key, XSeries] = dict(L.coeffs)
    for dexp, series in M.coeffs.items():
        coeffs[dexp] = coeffs[dexp] + series if dexp in coeffs else series
    coeffs = {
        d: s.reboxed(window.xlo, window.xhi, window.taylor)
        for d, s in coeffs.items()
        if all(x >= f for x, f in zip(d, window.dfloor))
    }
    return _settle(PsdOp(L.n, coeffs, window, L.aux))


def op_scale(L: PsdOp, c) -> PsdOp:
    c = Fraction(c)
    if c == 0:
        return PsdOp(L.n, {}, L.window, L.aux)
    return L.map_coefficients(lambda s: s.scale(c))


def op_neg(L: PsdOp) -> PsdOp:
    return op_scale(L, -1)


def op_sub(L: PsdOp, M: PsdOp) -> PsdOp:
    return op_add(L, op_neg(M))


def _product_window(WL: Window, WM: Window, floor=None):
    """
    Window of a Leibniz product and the per-variable bound on derivative
    counts that can reach its known region.
    """
    n = WL.n
    dfloor = [
        max(add_bound(WL.dfloor[c], WM.dtop[c]), add_bound(WM.dfloor[c], WL.dtop[c]))
        for c in range(n)
    ]
    if floor is not None:
        dfloor = [max(a, b) for a, b in zip(dfloor, floor)]
    dtop = [add_bound(WL.dtop[c], WM.dtop[c]) for c in range(n)]
    dbot = [WM.dbot[c] if WL.dbot[c] >= 0 else -INF for c in range(n)]

    kbound = []
    for c in range(n):
        bounds = []
        top = WL.dtop[c]
        bottom = max(WL.dfloor[c], WL.dbot[c])
        if top >= 0:
            bounds.append(min(top, top + WM.dtop[c] - dfloor[c]))
        if bottom <= -1:
            bounds.append(-1 + WM.dtop[c] - dfloor[c])
        kbound.append(max(max(bounds, default=0), 0))

    xlo, xhi = [], []
    for c in range(n):
        k = kbound[c]
        side_l = INF if WL.xhi[c] == INF else WL.xhi[c] + deriv_lo(WM.xlo[c], k)
        side_m = INF if WM.xhi[c] == INF else WM.xhi[c] - k + WL.xlo[c]
        hi = min(side_l, side_m)
        if hi == -INF:
            raise WindowTooSmall(
                "product has no known x-range; a finite d-floor is required"
            )
        xhi.append(hi)
        xlo.append(WL.xlo[c] + deriv_lo(WM.xlo[c], k))
    taylor = tuple(a and b for a, b in zip(WL.taylor, WM.taylor))
    window = Window(tuple(xlo), tuple(xhi), tuple(dbot), tuple(dfloor), tuple(dtop), taylor)
    return window, kbound


def _vanishing_degree(series: XSeries, c: int) -> int:
    """Number of x_c-derivatives after which an exact polynomial coefficient vanishes."""
    exps = [key[c] for key in series.terms]
    if series.hi[c] != INF or any(e < 0 for e in exps):
        raise WindowTooSmall(
            "infinite Leibniz expansion; a finite d-floor is required"
        )
    return max(exps, default=0)


def _derivative_table(series: XSeries, ks: Sequence[int]) -> Dict[Key, Fraction]:
    """Terms of d^k(series) as a raw table."""
    out = {}
    n = series.nvars
    for key, coeff in series.terms.items():
        factor = 1
        for c in range(n):
            factor *= falling_factorial(key[c], ks[c])
            if factor == 0:
                break
        if factor == 0:
            continue
        new = tuple(key[c] - ks[c] for c in range(n)) + key[n:]
        out[new] = coeff * factor
    return out


def op_mul(L: PsdOp, M: PsdOp, floor: Optional[Sequence[Bound]] = None) -> PsdOp:
    """
    Leibniz product sum C(i,k) a_i d^k(b_j) d^(i+j-k), one binomial per variable.

    Args:
        L (PsdOp): left factor
        M (PsdOp): right factor
        floor (sequence, optional): requested d-floor of the result; needed when
            the product would otherwise be an infinite expansion

    Returns:
        PsdOp: the product, exact on its propagated window
    """
    L, M = _align(L, M)
    n = L.n
    aux = L.aux
    if any(t == -INF for t in L.window.dtop) or any(t == -INF for t in M.window.dtop):
        return PsdOp.zero(n, aux)
    window, kbound = _product_window(L.window, M.window, floor)
    caps = [p.cap for p in aux]
    xhi = window.xhi
    dfloor = window.dfloor

    out: Dict[Key, Dict[Key, Fraction]] = {}
    cache: Dict[Tuple[Key, Key], Dict[Key, Fraction]] = {}
    kmax_seen = [0] * n
    for i, a in L.coeffs.items():
        for j, b in M.coeffs.items():
            kmax = []
            for c in range(n):
                bound = i[c] if i[c] >= 0 else INF
                if dfloor[c] != -INF:
                    bound = min(bound, i[c] + j[c] - dfloor[c])
                if bound == INF:
                    bound = _vanishing_degree(b, c)
                kmax.append(int(bound))
            if any(k < 0 for k in kmax):
                continue
            for ks in product(*(range(k + 1) for k in kmax)):
                coef = Fraction(1)
                for c in range(n):
                    coef *= binomial(i[c], ks[c])
                if coef == 0:
                    continue
                if (j, ks) not in cache:
                    cache[(j, ks)] = _derivative_table(b, ks)
                db = cache[(j, ks)]
                if not db:
                    continue
                for c in range(n):
                    kmax_seen[c] = max(kmax_seen[c], ks[c])
                dexp = tuple(i[c] - ks[c] + j[c] for c in range(n))
                target = out.setdefault(dexp, {})
                for ka, ca in a.terms.items():
                    for kb, cb in db.items():
                        key = tuple(x + y for x, y in zip(ka, kb))
                        if any(key[n + t] > caps[t] for t in range(len(caps))):
                            continue
                        if any(key[c] > xhi[c] for c in range(n)):
                            continue
                        target[key] = target.get(key, 0) + coef * ca * cb

    xlo = list(window.xlo)
    for c in range(n):
        if xlo[c] == -INF:
            xlo[c] = L.window.xlo[c] + deriv_lo(M.window.xlo[c], kmax_seen[c])
    window = replace(window, xlo=tuple(xlo))
    coeffs = {
        dexp: XSeries(n, table, window.taylor, window.xlo, window.xhi, aux)
        for dexp, table in out.items()
    }
    return _settle(PsdOp(n, coeffs, window, aux))


def op_pow(L: PsdOp, k: int, floor=None, xcap=None) -> PsdOp:
    """L^k; negative powers go through op_inverse."""
    if k < 0:
        return op_pow(op_inverse(L, floor=floor, xcap=xcap), -k, floor=floor)
    result = PsdOp.identity(L.n, L.aux)
    for _ in range(k):
        result = op_mul(result, L, floor=floor)
    return result


def op_commutator(L: PsdOp, M: PsdOp, floor=None) -> PsdOp:
    return op_sub(op_mul(L, M, floor=floor), op_mul(M, L, floor=floor))


def op_agrees(L: PsdOp, M: PsdOp) -> bool:
    """Equality of every coefficient in the common known region."""
    L, M = _align(L, M)
    floor = tuple(max(a, b) for a, b in zip(L.window.dfloor, M.window.dfloor))
    xhi = tuple(min(a, b) for a, b in zip(L.window.xhi, M.window.xhi))
    for dexp in set(L.coeffs) | set(M.coeffs):
        if any(d < f for d, f in zip(dexp, floor)):
            continue
        left = L.coefficient(dexp).restrict_hi(xhi)
        right = M.coefficient(dexp).restrict_hi(xhi)
        if not left.agrees_with(right):
            return False
    return True


def op_is_zero(L: PsdOp) -> bool:
    return L.is_zero()


def op_restrict(L: PsdOp, xhi=None, dfloor=None) -> PsdOp:
    """Narrow the window: lower x-bounds and/or raise d-floors."""
    w = L.window
    if xhi is not None:
        w = replace(w, xhi=tuple(min(a, b) for a, b in zip(w.xhi, xhi)))
    if dfloor is not None:
        w = replace(w, dfloor=tuple(max(a, b) for a, b in zip(w.dfloor, dfloor)))
    return L.with_window(w)


def op_coefficient(L: PsdOp, xexp, dexp) -> Fraction:
    """
    Coordinate extractor: coefficient of x^xexp d^dexp.

    Raises:
        WindowTooSmall: the monomial lies outside the known region
    """
    if not L.window.knows(xexp, dexp):
        raise WindowTooSmall(f"x^{tuple(xexp)} d^{tuple(dexp)} is outside the known region")
    return L.coefficient(dexp).coefficient(xexp)


# Order, highest term


def _leading(L: PsdOp):
    if L.is_zero():
        raise ZeroOperator("operator has no terms in its window")
    nu = max(L.coeffs, key=lex_key)
    w = L.window
    for c in range(L.n):
        if w.dfloor[c] == -INF:
            continue
        below = min(w.dtop[c], w.dfloor[c] - 1)
        if below < w.dbot[c]:
            continue
        candidate = list(w.dtop)
        candidate[c] = below
        if any(abs(v) == INF for v in candidate):
            continue
        if lex_key(candidate) >= lex_key(nu):
            raise WindowTooSmall("the highest term is not determined by the window")
    return nu, L.coeffs[nu]


def op_nu(L: PsdOp) -> Key:
    """
    Exponent vector of the highest term (d_n most significant).

    Raises:
        ZeroOperator: L has no terms
        WindowTooSmall: unknown terms below the floor could dominate
    """
    return _leading(L)[0]


def op_order(L: PsdOp) -> int:
    return op_nu(L)[-1]


def op_highest_term(L: PsdOp) -> PsdOp:
    """f d^nu with f the full leading coefficient series."""
    nu, f = _leading(L)
    window = Window(f.lo, f.hi, nu, (-INF,) * L.n, nu, f.taylor)
    return PsdOp(L.n, {nu: f}, window, L.aux)


# Projections


def op_split(L: PsdOp):
    """
    (plus, minus): plus has every term with d_n-exponent >= 0.

    The plus part is exact in d_n when dfloor_n <= 0.
    """
    n = L.n
    w = L.window
    plus = {d: s for d, s in L.coeffs.items() if d[-1] >= 0}
    minus = {d: s for d, s in L.coeffs.items() if d[-1] < 0}
    floor_n = -INF if w.dfloor[-1] <= 0 else w.dfloor[-1]
    plus_window = replace(
        w,
        dfloor=w.dfloor[:-1] + (floor_n,),
        dbot=w.dbot[:-1] + (max(w.dbot[-1], 0),),
    )
    if plus_window.dbot[-1] > plus_window.dtop[-1]:
        plus_window = replace(plus_window, dtop=(-INF,) * n)
    minus_window = replace(w, dtop=w.dtop[:-1] + (min(w.dtop[-1], -1),))
    if minus_window.dtop[-1] < minus_window.dbot[-1]:
        minus_window = replace(minus_window, dtop=(-INF,) * n)
    return _settle(PsdOp(n, plus, plus_window, L.aux)), _settle(
        PsdOp(n, minus, minus_window, L.aux)
    )


def op_plus(L: PsdOp) -> PsdOp:
    return op_split(L)[0]


def op_minus(L: PsdOp) -> PsdOp:
    return op_split(L)[1]


def op_split_x(L: PsdOp, i: int, threshold: int = 1):
    """
    Split by the x_i-exponent of the coefficients: (exponent >= threshold, rest).

    threshold 1 pairs x k[[x]] with k[x^-1]; threshold 0 pairs k[[x]] with x^-1 k[x^-1].
    """
    w = L.window
    upper, lower = {}, {}
    for dexp, series in L.coeffs.items():
        up, low = series.split_x(i, threshold)
        upper[dexp] = up
        lower[dexp] = low
    xlo = list(w.xlo)
    xlo[i] = max(xlo[i], threshold)
    upper_window = replace(w, xlo=tuple(xlo))
    upper = {d: s.reboxed(upper_window.xlo, w.xhi, w.taylor) for d, s in upper.items()}
    xhi = list(w.xhi)
    if xhi[i] >= threshold - 1:
        xhi[i] = INF
    lower_window = replace(w, xhi=tuple(xhi))
    lower = {d: s.reboxed(w.xlo, lower_window.xhi, w.taylor) for d, s in lower.items()}
    return PsdOp(L.n, upper, upper_window, L.aux), PsdOp(L.n, lower, lower_window, L.aux)


# Inverse and roots


def op_inverse(L: PsdOp, floor=None, xcap=None) -> PsdOp:
    """
    Inverse by factoring the highest term h = f d^nu and summing the geometric
    series in g = h^-1 L - 1.

    Args:
        L (PsdOp): nonzero operator
        floor (sequence, optional): requested d-floor of the inverse; defaults
            to the precision the window of L supports
        xcap (int or sequence, optional): x-degree cap for inverting a
            non-monomial leading coefficient

    Returns:
        PsdOp: L^-1, exact on its window

    Raises:
        ZeroOperator: L has no terms
        NotInvertibleInE: E-type with a leading coefficient that is not a unit
    """
    n = L.n
    nu, f = _leading(L)
    if L.is_e_type() and f.coefficient((0,) * n) == 0:
        raise NotInvertibleInE("leading coefficient is not a unit of k[[x]]")
    if floor is None:
        floor = tuple(add_bound(w, -2 * v) for w, v in zip(L.window.dfloor, nu))
    floor = tuple(floor)
    neg_nu = tuple(-v for v in nu)

    finv = f.without_aux().inverse(cap=xcap).with_aux(L.aux)
    hinv = op_mul(PsdOp.d_power(n, neg_nu), PsdOp.scalar(finv), floor=floor)
    inner_floor = tuple(add_bound(fl, v) for fl, v in zip(floor, nu))
    g = op_sub(op_mul(hinv, L, floor=inner_floor), PsdOp.identity(n, L.aux))
    neg_g = op_neg(g)

    total = PsdOp.identity(n, L.aux)
    power = total
    max_steps = PERFORMANCE_CONFIG["max_series_steps"]
    steps = 0
    while True:
        power = op_mul(power, neg_g, floor=inner_floor)
        if power.is_zero():
            break
        total = op_add(total, power)
        steps += 1
        if steps > max_steps:
            raise WindowTooSmall(f"geometric series did not terminate in {max_steps} steps")
    logger.debug("operator inverse summed %d powers", steps)
    return op_mul(total, hinv, floor=floor)


def op_root(L: PsdOp, m: int, floor=None, xcap=None) -> PsdOp:
    """
    Principal m-th root by term-at-a-time correction.

    Each step cancels the highest remaining term r d^mu of L - M^m with
    Delta = r / (m f^(m-1)) d^(mu - (m-1)nu/m), where f d^(nu/m) is the
    highest term of M.

    Raises:
        ExponentNotDivisible: nu(L) is not divisible by m
        CoefficientNotAPower: the leading rational coefficient is not an m-th power
    """
    if m < 1:
        raise ValueError("root index must be positive")
    n = L.n
    nu, f = _leading(L)
    if any(v % m for v in nu):
        raise ExponentNotDivisible(f"nu = {nu} is not divisible by {m}")
    top = tuple(v // m for v in nu)
    shift = tuple(v - t for v, t in zip(nu, top))
    f_root = f.without_aux().root(m, cap=xcap).with_aux(L.aux)
    if floor is None:
        floor = tuple(add_bound(fl, -s) for fl, s in zip(L.window.dfloor, shift))
    floor = tuple(floor)

    if m == 1:
        return L
    denom = f_root.without_aux()
    for _ in range(m - 2):
        denom = denom * f_root.without_aux()
    denom_inv = (denom * m).inverse(cap=xcap).with_aux(L.aux)

    M = PsdOp.make(n, {top: f_root}, aux=L.aux)
    M = M.with_window(replace(M.window, dfloor=floor, dbot=(-INF,) * n))
    max_steps = PERFORMANCE_CONFIG["max_series_steps"]
    for step in range(max_steps + 1):
        residual = op_sub(L, op_pow(M, m, floor=L.window.dfloor))
        open_terms = [
            d
            for d in residual.coeffs
            if all(add_bound(u, -s) >= fl for u, s, fl in zip(d, shift, M.window.dfloor))
        ]
        if not open_terms:
            break
        mu = max(open_terms, key=lex_key)
        delta_pos = tuple(u - s for u, s in zip(mu, shift))
        delta = PsdOp.make(n, {delta_pos: residual.coeffs[mu] * denom_inv}, aux=L.aux)
        M = op_add(M, delta)
    else:
        raise WindowTooSmall(f"root correction did not terminate in {max_steps} steps")
    logger.debug("operator root used %d corrections", step)
    final_floor = tuple(
        max(fm, add_bound(fr, -s))
        for fm, fr, s in zip(M.window.dfloor, residual.window.dfloor, shift)
    )
    xhi = tuple(min(a, b) for a, b in zip(M.window.xhi, residual.window.xhi))
    return op_restrict(M, xhi=xhi, dfloor=final_floor)


# Residue and pairing


def _residue_coefficient(L: PsdOp) -> XSeries:
    n = L.n
    target = (-1,) * n
    w = L.window
    if any(f > -1 for f in w.dfloor):
        raise WindowTooSmall("d-floor lies above the residue exponent")
    if any(h < -1 for h in w.xhi):
        raise WindowTooSmall("x-bound lies below the residue exponent")
    return L.coefficient(target)


def op_residue(L: PsdOp) -> Fraction:
    """
    Coefficient of x_1^-1...x_n^-1 d_1^-1...d_n^-1.

    Raises:
        WindowTooSmall: the residue exponent lies outside the known region
    """
    return _residue_coefficient(L).coefficient((-1,) * L.n)


def op_residue_series(L: PsdOp) -> XSeries:
    """Residue with the auxiliary parameters kept (a series in 0 x-variables)."""
    return xs_residue_series(_residue_coefficient(L))


def op_pair(L: PsdOp, M: PsdOp) -> Fraction:
    """<L, M> = res(LM)."""
    return op_residue(op_mul(L, M, floor=(-1,) * L.n))


def op_pair_series(L: PsdOp, M: PsdOp) -> XSeries:
    return op_residue_series(op_mul(L, M, floor=(-1,) * L.n))


def dual_monomial(alpha, beta, floor) -> PsdOp:
    """
    d^(-1-beta) x^(-1-alpha): pairs to 1 with x^alpha d^beta and to 0 with
    every other monomial.
    """
    n = len(alpha)
    left = PsdOp.d_power(n, tuple(-1 - b for b in beta))
    right = PsdOp.scalar(XSeries.monomial(n, tuple(-1 - a for a in alpha)))
    return op_mul(left, right, floor=floor)


# Tuples


@dataclass(frozen=True)
class OpTuple:
    """A point (L_1, ..., L_n) of P^n."""

    slots: Tuple[PsdOp, ...]

    def __post_init__(self):
        slots = tuple(self.slots)
        if not slots:
            raise DimensionMismatch("empty operator tuple")
        n = slots[0].n
        if len(slots) != n or any(op.n != n for op in slots):
            raise DimensionMismatch(f"a tuple in {n} variables needs {n} slots")
        object.__setattr__(self, "slots", slots)

    @property
    def n(self) -> int:
        return len(self.slots)

    def __getitem__(self, i) -> PsdOp:
        return self.slots[i]

    def __iter__(self):
        return iter(self.slots)

    def __len__(self):
        return len(self.slots)

    @classmethod
    def generators(cls, n) -> "OpTuple":
        return cls(tuple(PsdOp.d(n, i) for i in range(n)))

    def map(self, fn) -> "OpTuple":
        return OpTuple(tuple(fn(op) for op in self.slots))


def tuple_add(A: OpTuple, B: OpTuple) -> OpTuple:
    return OpTuple(tuple(op_add(a, b) for a, b in zip(A, B)))


def tuple_sub(A: OpTuple, B: OpTuple) -> OpTuple:
    return OpTuple(tuple(op_sub(a, b) for a, b in zip(A, B)))


def tuple_scale(A: OpTuple, c) -> OpTuple:
    return A.map(lambda op: op_scale(op, c))


def tuple_commutator(P: PsdOp, A: OpTuple, floor=None) -> OpTuple:
    """([P, A_1], ..., [P, A_n])."""
    return A.map(lambda op: op_commutator(P, op, floor=floor))


def tuple_power(A: OpTuple, ks: Sequence[int], floor=None) -> PsdOp:
    """The word A_1^k_1 ... A_n^k_n (exponents >= 0)."""
    if any(k < 0 for k in ks):
        raise ValueError("word exponents must be nonnegative")
    result = PsdOp.identity(A.n, A[0].aux)
    for op, k in zip(A, ks):
        for _ in range(k):
            result = op_mul(result, op, floor=floor)
    return result


def tuple_pair(A: OpTuple, B: OpTuple) -> Fraction:
    """Slotwise sum of pairings."""
    if A.n != B.n:
        raise DimensionMismatch("tuples of different lengths")
    return sum((op_pair(a, b) for a, b in zip(A, B)), Fraction(0))


def tuple_agrees(A: OpTuple, B: OpTuple) -> bool:
    return A.n == B.n and all(op_agrees(a, b) for a, b in zip(A, B))


def tuple_is_zero(A: OpTuple) -> bool:
    return all(op.is_zero() for op in A)


# Symbols


@dataclass(frozen=True)
class Symbol:
    """sigma(L): the operator's table read with d-exponents as z-exponents."""

    n: int
    coeffs: Mapping[Key, XSeries]
    window: Window
    aux: Tuple[AuxParam, ...] = ()

    def as_operator(self) -> PsdOp:
        return PsdOp(self.n, self.coeffs, self.window, self.aux)


def op_symbol(L: PsdOp) -> Symbol:
    return Symbol(L.n, dict(L.coeffs), L.window, L.aux)


def symbol_star(F: Symbol, G: Symbol, floor=None) -> Symbol:
    """
    F * G = sum over alpha >= 0 of (1/alpha!) D_z^alpha F d_x^alpha G.

    Computed directly on z-monomials; it is the independent check on op_mul.
    """
    if F.n != G.n:
        raise DimensionMismatch("symbols in different dimensions")
    n = F.n
    aux = merge_aux(F.aux, G.aux)
    if any(t == -INF for t in F.window.dtop) or any(t == -INF for t in G.window.dtop):
        return Symbol(n, {}, Window.exact(n), aux)
    window, _ = _product_window(F.window, G.window, floor)
    caps = [p.cap for p in aux]
    out: Dict[Key, Dict[Key, Fraction]] = {}
    for zi, fser in F.coeffs.items():
        fser = fser.with_aux(aux)
        for zj, gser in G.coeffs.items():
            gser = gser.with_aux(aux)
            ranges = []
            for c in range(n):
                bound = zi[c] if zi[c] >= 0 else INF
                if window.dfloor[c] != -INF:
                    bound = min(bound, zi[c] + zj[c] - window.dfloor[c])
                if bound == INF:
                    bound = _vanishing_degree(gser, c)
                ranges.append(range(int(bound) + 1) if bound >= 0 else range(0))
            for alpha in product(*ranges):
                weight = Fraction(1)
                for c in range(n):
                    weight *= Fraction(falling_factorial(zi[c], alpha[c]))
                    for t in range(2, alpha[c] + 1):
                        weight /= t
                if weight == 0:
                    continue
                zexp = tuple(zi[c] - alpha[c] + zj[c] for c in range(n))
                derived = gser
                for c in range(n):
                    for _ in range(alpha[c]):
                        derived = derived.deriv(c)
                target = out.setdefault(zexp, {})
                for kf, cf in fser.terms.items():
                    for kg, cg in derived.terms.items():
                        key = tuple(x + y for x, y in zip(kf, kg))
                        if any(key[n + t] > caps[t] for t in range(len(caps))):
                            continue
                        if any(key[c] > window.xhi[c] for c in range(n)):
                            continue
                        target[key] = target.get(key, 0) + weight * cf * cg
    coeffs = {
        z: XSeries(n, table, window.taylor, window.xlo, window.xhi, aux)
        for z, table in out.items()
    }
    result = PsdOp(n, coeffs, window, aux)
    return Symbol(n, result.coeffs, window, aux)


def generator_commutation_check(L: PsdOp) -> bool:
    """True iff L commutes with every d_i and every x_i inside its window."""
    for i in range(L.n):
        if not op_commutator(L, PsdOp.d(L.n, i)).is_zero():
            return False
        if not op_commutator(L, PsdOp.x(L.n, i)).is_zero():
            return False
    return True
