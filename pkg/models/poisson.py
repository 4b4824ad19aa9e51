"""
Poisson Structures
==================
Functionals on P^n, their gradients through the residue pairing, the
Lie-Poisson bracket, the R-matrix bracket for a chosen splitting, and the
Hamiltonian flows of the functionals H_k.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from models.errors import DimensionMismatch, HypothesisFailed, NotCommuting, WindowTooSmall
from models.hierarchy import vfield
from models.psdo import (
    OpTuple,
    PsdOp,
    dual_monomial,
    op_add,
    op_agrees,
    op_commutator,
    op_mul,
    op_pair_series,
    op_plus,
    op_pow,
    op_residue,
    op_residue_series,
    op_scale,
    op_split,
    op_split_x,
    op_sub,
    tuple_pair,
    tuple_power,
)
from models.series import INF, AuxParam, XSeries

logger = logging.getLogger(__name__)

EPSILON = AuxParam("eps", 1)


@dataclass(frozen=True, order=True)
class Extractor:
    """c_{alpha,beta,i}: coefficient of x^alpha d^beta in slot i (0-based)."""

    slot: int
    alpha: Tuple[int, ...]
    beta: Tuple[int, ...]

    def series(self, L: OpTuple) -> XSeries:
        """The coefficient as a series in zero x-variables, auxiliary parameters kept."""
        op = L[self.slot]
        if not op.window.knows(self.alpha, self.beta):
            raise WindowTooSmall(f"extractor {self.label()} lies outside the window")
        coefficient = op.coefficient(self.beta)
        n = op.n
        terms = {k[n:]: c for k, c in coefficient.terms.items() if k[:n] == self.alpha}
        return XSeries(0, terms, (), (), (), coefficient.aux)

    def value(self, L: OpTuple) -> Fraction:
        return self.series(L).coefficient(())

    def label(self) -> str:
        return f"c[{self.slot + 1}; x^{self.alpha} d^{self.beta}]"


def _constant(value, aux=()) -> XSeries:
    return XSeries.constant(0, value, aux=aux)


def _epsilon_part(value: XSeries) -> Fraction:
    return value.coefficient((), auxexp=_degrees(value, {EPSILON.name: 1}))


def _degrees(value: XSeries, wanted: Dict[str, int]) -> Tuple[int, ...]:
    return tuple(wanted.get(p.name, 0) for p in value.aux)


def _with_epsilon(L: OpTuple, M: OpTuple) -> OpTuple:
    """L + eps M with eps^2 = 0."""
    def lift(op):
        return op.with_aux(op.aux + (EPSILON,)) if EPSILON not in op.aux else op

    slots = []
    for a, b in zip(L, M):
        b = lift(b)
        key = (0,) * b.n + tuple(1 if p == EPSILON else 0 for p in b.aux)
        epsilon = XSeries.make(b.n, {key: 1}, taylor=True, aux=b.aux)
        slots.append(op_add(lift(a), b.map_coefficients(lambda s: s * epsilon)))
    return OpTuple(tuple(slots))


def _gradient_floor(L: OpTuple, floor):
    if floor is None:
        floor = tuple(max(op.window.dfloor[c] for op in L) for c in range(L.n))
    floor = tuple(floor)
    if any(f == -INF for f in floor):
        raise WindowTooSmall("gradient needs a finite d-floor")
    return floor


class Functional:
    """Base class: a functional F on P^n with its gradient."""

    def evaluate_series(self, L: OpTuple) -> XSeries:
        raise NotImplementedError

    def gradient(self, L: OpTuple, floor=None) -> OpTuple:
        raise NotImplementedError

    def evaluate(self, L: OpTuple) -> Fraction:
        return self.evaluate_series(L).coefficient(())


@dataclass(frozen=True)
class PolynomialFunctional(Functional):
    """
    Polynomial in coordinate extractors.

    ``terms`` maps a monomial, a tuple of (Extractor, power) pairs, to its
    rational coefficient; the empty monomial is the constant term.
    """

    terms: Dict[Tuple[Tuple[Extractor, int], ...], Fraction] = field(default_factory=dict)

    def extractors(self) -> List[Extractor]:
        found = set()
        for monomial in self.terms:
            for extractor, _ in monomial:
                found.add(extractor)
        return sorted(found)

    def _evaluate(self, values: Dict[Extractor, XSeries], aux) -> XSeries:
        total = _constant(0, aux)
        for monomial, coeff in self.terms.items():
            term = _constant(coeff, aux)
            for extractor, power in monomial:
                for _ in range(power):
                    term = term * values[extractor]
            total = total + term
        return total

    def evaluate_series(self, L: OpTuple) -> XSeries:
        values = {e: e.series(L) for e in self.extractors()}
        return self._evaluate(values, ())

    def partials(self, L: OpTuple) -> Dict[Extractor, Fraction]:
        """Exact partial derivatives by dual-number evaluation, one extractor at a time."""
        base = {e: _constant(e.value(L), (EPSILON,)) for e in self.extractors()}
        epsilon = XSeries.make(0, {(1,): 1}, aux=(EPSILON,))
        partials = {}
        for extractor in base:
            values = dict(base)
            values[extractor] = base[extractor] + epsilon
            partial = self._evaluate(values, (EPSILON,)).coefficient((), (1,))
            if partial != 0:
                partials[extractor] = partial
        return partials

    def gradient(self, L: OpTuple, floor=None) -> OpTuple:
        floor = _gradient_floor(L, floor)
        slots = [PsdOp.zero(L.n) for _ in range(L.n)]
        for extractor, partial in self.partials(L).items():
            dual = dual_monomial(extractor.alpha, extractor.beta, floor)
            slots[extractor.slot] = op_add(slots[extractor.slot], op_scale(dual, partial))
        return OpTuple(tuple(slots))


@dataclass(frozen=True)
class LinearFunctional(Functional):
    """F_M(L) = <L, M>."""

    M: OpTuple

    def evaluate_series(self, L: OpTuple) -> XSeries:
        total = _constant(0)
        for a, b in zip(L, self.M):
            total = total + op_pair_series(a, b)
        return total

    def partials(self, floor) -> Dict[Extractor, Fraction]:
        """
        Extractors with a nonzero partial: for each term x^a d^b of M_i and
        each k >= 0 with b - k >= floor, (alpha, beta) = (k-1-a, k-1-b); the
        partial is res(x^alpha d^beta M_i).
        """
        n = self.M.n
        partials = {}
        for slot, op in enumerate(self.M):
            seen = set()
            for xexp, dexp, auxexp, _ in op.terms():
                if any(auxexp):
                    continue
                spans = [range(0, int(d - f) + 1) for d, f in zip(dexp, floor)]
                for ks in _grid(spans):
                    alpha = tuple(k - 1 - a for k, a in zip(ks, xexp))
                    beta = tuple(k - 1 - b for k, b in zip(ks, dexp))
                    if (alpha, beta) in seen:
                        continue
                    seen.add((alpha, beta))
                    monomial = PsdOp.monomial(n, alpha, beta)
                    value = op_residue(op_mul(monomial, op, floor=(-1,) * n))
                    if value != 0:
                        partials[Extractor(slot, alpha, beta)] = value
        return partials

    def gradient(self, L: OpTuple, floor=None) -> OpTuple:
        floor = _gradient_floor(L, floor)
        floor = tuple(max(f, max(op.window.dfloor[c] for op in self.M)) for c, f in enumerate(floor))
        slots = [PsdOp.zero(L.n) for _ in range(L.n)]
        for extractor, partial in self.partials(floor).items():
            dual = dual_monomial(extractor.alpha, extractor.beta, floor)
            slots[extractor.slot] = op_add(slots[extractor.slot], op_scale(dual, partial))
        return OpTuple(tuple(slots))


def _grid(spans):
    if not spans:
        yield ()
        return
    for head in spans[0]:
        for tail in _grid(spans[1:]):
            yield (head,) + tail


@dataclass(frozen=True)
class ResPowerFunctional(Functional):
    """H_k(L) = res(L_1^k_1 ... L_n^k_n)."""

    k: Tuple[int, ...]

    def evaluate_series(self, L: OpTuple) -> XSeries:
        return op_residue_series(tuple_power(L, self.k, floor=(-1,) * L.n))

    def gradient(self, L: OpTuple, floor=None) -> OpTuple:
        """
        Cyclic sum: slot i collects suffix * prefix over every occurrence of
        L_i in the word.
        """
        word = []
        for i, k in enumerate(self.k):
            word.extend([i] * k)
        slots = [PsdOp.zero(L.n, L[0].aux) for _ in range(L.n)]
        for p, index in enumerate(word):
            suffix = _word(L, word[p + 1 :], floor)
            prefix = _word(L, word[:p], floor)
            slots[index] = op_add(slots[index], op_mul(suffix, prefix, floor=floor))
        return OpTuple(tuple(slots))


def _word(L: OpTuple, word, floor=None) -> PsdOp:
    result = PsdOp.identity(L.n, L[0].aux)
    for index in word:
        result = op_mul(result, L[index], floor=floor)
    return result


@dataclass(frozen=True)
class CombinedN2Functional(Functional):
    """H_m = (1/m) sum_{k+l=m} C(m,k) H_{(k,l)} on P^2."""

    m: int

    def parts(self) -> List[Tuple[Fraction, ResPowerFunctional]]:
        return [
            (Fraction(comb(self.m, k), self.m), ResPowerFunctional((k, self.m - k)))
            for k in range(self.m + 1)
        ]

    def evaluate_series(self, L: OpTuple) -> XSeries:
        if L.n != 2:
            raise DimensionMismatch("combined Hamiltonians are defined for n = 2")
        total = _constant(0)
        for weight, part in self.parts():
            total = total + part.evaluate_series(L).scale(weight)
        return total

    def gradient(self, L: OpTuple, floor=None) -> OpTuple:
        if L.n != 2:
            raise DimensionMismatch("combined Hamiltonians are defined for n = 2")
        slots = [PsdOp.zero(2, L[0].aux), PsdOp.zero(2, L[0].aux)]
        for weight, part in self.parts():
            grad = part.gradient(L, floor)
            slots = [op_add(s, op_scale(g, weight)) for s, g in zip(slots, grad)]
        return OpTuple(tuple(slots))


def f_eval(F: Functional, L: OpTuple) -> Fraction:
    """
    Value of the functional at L.

    Raises:
        WindowTooSmall: an extractor or residue lies outside the window
    """
    return F.evaluate(L)


def f_gradient(F: Functional, L: OpTuple, floor=None) -> OpTuple:
    """Gradient: the tuple with <M, grad F(L)> = d/d eps F(L + eps M)."""
    return F.gradient(L, floor)


def variational_derivative(F: Functional, L: OpTuple, M: OpTuple) -> Fraction:
    """d/d eps F(L + eps M) at eps = 0, evaluated with eps^2 = 0."""
    value = F.evaluate_series(_with_epsilon(L, M))
    return _epsilon_part(value)


def grad_hk_closed(L: OpTuple, k: Sequence[int], floor=None) -> OpTuple:
    """
    U_i = k_i L_1^k_1 ... L_i^(k_i - 1) ... L_n^k_n.

    Raises:
        NotCommuting: L is not a commuting tuple on its window
    """
    _require_commuting(L)
    slots = []
    for i, ki in enumerate(k):
        if ki == 0:
            slots.append(PsdOp.zero(L.n, L[0].aux))
            continue
        lowered = list(k)
        lowered[i] -= 1
        slots.append(op_scale(tuple_power(L, lowered, floor=floor), ki))
    return OpTuple(tuple(slots))


def _require_commuting(L: OpTuple):
    for i in range(L.n):
        for j in range(i + 1, L.n):
            if not op_commutator(L[i], L[j]).is_zero():
                raise NotCommuting(f"L{i + 1} and L{j + 1} do not commute on the window")


@dataclass(frozen=True)
class SplittingConfig:
    """
    Splitting behind the R-matrix R = P_+ - P_-.

    kind "standard" splits by the sign of the d_n-exponent; kind "x" splits
    coefficients by the x_index exponent at ``threshold``.
    """

    kind: str = "standard"
    index: int = 0
    threshold: int = 1

    def __post_init__(self):
        if self.kind not in ("standard", "x"):
            raise ValueError(f"unknown splitting {self.kind!r}")

    def project(self, op: PsdOp):
        if self.kind == "standard":
            return op_split(op)
        return op_split_x(op, self.index, self.threshold)

    def is_subring_on(self, ops: Sequence[PsdOp]) -> bool:
        """Both images closed under multiplication on the given samples."""
        pluses = [self.project(op)[0] for op in ops]
        minuses = [self.project(op)[1] for op in ops]
        for a in pluses:
            for b in pluses:
                if not self.project(op_mul(a, b))[1].is_zero():
                    return False
        for a in minuses:
            for b in minuses:
                if not self.project(op_mul(a, b))[0].is_zero():
                    return False
        return True


def bracket_lie(F: Functional, G: Functional, L: OpTuple, floor=None) -> Fraction:
    """{F, G}(L) = <L, [grad F, grad G]>."""
    grad_f = F.gradient(L, floor)
    grad_g = G.gradient(L, floor)
    X = OpTuple(tuple(op_commutator(a, b) for a, b in zip(grad_f, grad_g)))
    return tuple_pair(L, X)


def r_commutator(X: PsdOp, Y: PsdOp, split: SplittingConfig) -> PsdOp:
    """[X, Y]_R = [X_+, Y_+] - [X_-, Y_-]."""
    xp, xm = split.project(X)
    yp, ym = split.project(Y)
    return op_sub(op_commutator(xp, yp), op_commutator(xm, ym))


def bracket_r(F: Functional, G: Functional, L: OpTuple, split: Optional[SplittingConfig] = None,
              floor=None) -> Fraction:
    """{F, G}_R(L) = <L, [grad F, grad G]_R>."""
    split = split or SplittingConfig()
    grad_f = F.gradient(L, floor)
    grad_g = G.gradient(L, floor)
    X = OpTuple(tuple(r_commutator(a, b, split) for a, b in zip(grad_f, grad_g)))
    return tuple_pair(L, X)


def ham_flow_form(H: Functional, L: OpTuple, floor=None) -> OpTuple:
    """
    ([(U_1)_+, L_1], ..., [(U_n)_+, L_n]) for U = grad H(L).

    Raises:
        HypothesisFailed: some [U_i, L_i] is nonzero
    """
    U = H.gradient(L, floor)
    for i, (u, op) in enumerate(zip(U, L)):
        if not op_commutator(u, op).is_zero():
            raise HypothesisFailed(f"[U{i + 1}, L{i + 1}] is nonzero")
    return OpTuple(tuple(op_commutator(op_plus(u), op) for u, op in zip(U, L)))


def ham_flow_variational_check(H: Functional, L: OpTuple, M: OpTuple) -> bool:
    """{F_M, H}_R(L) = <flow, M> for the linear functional F_M."""
    flow = ham_flow_form(H, L)
    return bracket_r(LinearFunctional(M), H, L) == tuple_pair(flow, M)


def hamiltonian_flow(L: OpTuple, k: Sequence[int]) -> OpTuple:
    """Hamiltonian flow of H_k for the standard R-bracket."""
    return ham_flow_form(ResPowerFunctional(tuple(k)), L)


def hamiltonian_vfield_check(L: OpTuple, k: Sequence[int], i: int) -> bool:
    """
    Whether the H_k flow equals k_i V^(k - e_i), the flow of the time lowered in slot i.

    Always true for n = 1; for n >= 2 the two differ at general points.
    """
    if k[i] < 1:
        raise ValueError(f"k[{i}] must be positive")
    lowered = list(k)
    lowered[i] -= 1
    flow = hamiltonian_flow(L, k)
    field = vfield(L, lowered)
    return all(op_agrees(a, op_scale(b, k[i])) for a, b in zip(flow, field))


def combined_hamiltonian_flow_n2(L: OpTuple, m: int) -> OpTuple:
    """
    ([(L_1 + L_2)^(m-1)_+, L_1], [(L_1 + L_2)^(m-1)_+, L_2]).

    Raises:
        DimensionMismatch: n != 2
        NotCommuting: L is not a commuting tuple on its window
    """
    if L.n != 2:
        raise DimensionMismatch("combined Hamiltonians are defined for n = 2")
    if m < 1:
        raise ValueError("m must be positive")
    _require_commuting(L)
    P = op_plus(op_pow(op_add(L[0], L[1]), m - 1))
    return OpTuple(tuple(op_commutator(P, op) for op in L))
