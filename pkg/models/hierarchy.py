"""
KP Hierarchy
============
Vector fields V^m on P^n, their formal-time solutions, and the consistency
statements around them: conserved quantities, Zakharov-Shabat and
Sato-Wilson equations, tangency to the commuting locus, commuting flows and
invariant submanifolds cut out by V(L)_- = 0.

Formal time is a nilpotent auxiliary parameter whose cap is the Taylor degree,
so every flow is solved exactly by Picard iteration.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from models.errors import ConstraintNotSatisfied
from models.psdo import (
    OpTuple,
    PsdOp,
    op_add,
    op_agrees,
    op_commutator,
    op_inverse,
    op_minus,
    op_mul,
    op_neg,
    op_plus,
    op_residue,
    op_residue_series,
    op_sub,
    tuple_commutator,
    tuple_power,
)
from models.series import AuxParam, XSeries, xs_truncate_aux

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowSpec:
    """The time t_m (m >= 0 componentwise) and the Taylor degree in it."""

    m: Tuple[int, ...]
    degree: int = 1
    time: str = "t"

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if any(v < 0 for v in self.m):
            raise ValueError(f"flow index must be nonnegative, got {self.m}")
        if self.degree < 1:
            raise ValueError("Taylor degree must be at least 1")

    @property
    def param(self) -> AuxParam:
        return AuxParam(self.time, self.degree)


@dataclass(frozen=True)
class FlowTrajectory:
    """OpTuple whose coefficients carry the time parameter."""

    state: OpTuple
    spec: FlowSpec

    def at_zero(self) -> OpTuple:
        return self.state.map(lambda op: op.aux_constant_part().without_aux())


@dataclass(frozen=True)
class SatoWilsonTrajectory:
    S: PsdOp
    S_inverse: PsdOp
    spec: FlowSpec

    def induced(self) -> OpTuple:
        """L(t) = (S d_1 S^-1, ..., S d_n S^-1)."""
        n = self.S.n
        return OpTuple(
            tuple(op_mul(op_mul(self.S, PsdOp.d(n, i)), self.S_inverse) for i in range(n))
        )


def word_product(L: OpTuple, word: Sequence[int], floor=None) -> PsdOp:
    """L_{w_1} L_{w_2} ... for a word of 0-based slot indices."""
    result = PsdOp.identity(L.n, L[0].aux)
    for index in word:
        result = op_mul(result, L[index], floor=floor)
    return result


def exponent_word(ks: Sequence[int]) -> List[int]:
    """The word of L_1^k_1 ... L_n^k_n."""
    word = []
    for i, k in enumerate(ks):
        word.extend([i] * k)
    return word


def word_derivative(L: OpTuple, X: OpTuple, word: Sequence[int], floor=None) -> PsdOp:
    """
    First-order variation of the word along the tangent tuple X:
    sum over positions of prefix X_{w_p} suffix.
    """
    total = None
    for p, index in enumerate(word):
        term = op_mul(
            op_mul(word_product(L, word[:p], floor), X[index], floor=floor),
            word_product(L, word[p + 1 :], floor),
            floor=floor,
        )
        total = term if total is None else op_add(total, term)
    if total is None:
        return PsdOp.zero(L.n, L[0].aux)
    return total


def vfield(L: OpTuple, m: Sequence[int], floor=None) -> OpTuple:
    """
    V^m_L = ([P, L_1], ..., [P, L_n]) with P = (L_1^m_1 ... L_n^m_n)_+.
    """
    P = op_plus(tuple_power(L, m, floor=floor))
    return tuple_commutator(P, L, floor=floor)


def _with_param(L: OpTuple, param: AuxParam) -> OpTuple:
    def attach(op):
        names = [p.name for p in op.aux]
        if param.name in names:
            return op
        return op.with_aux(op.aux + (param,))

    return L.map(attach)


def flow_taylor(L0: OpTuple, spec: FlowSpec) -> FlowTrajectory:
    """
    Solve dL/dt_m = V^m(L) as a Taylor series in t of the given degree.

    Picard iteration L <- L0 + integral_0^t V^m(L) dt; the k-th iterate is
    exact through t^k.
    """
    start = _with_param(L0, spec.param)
    state = start
    for step in range(spec.degree):
        V = vfield(state, spec.m)
        state = OpTuple(
            tuple(op_add(a, v.aux_integrate(spec.time)) for a, v in zip(start, V))
        )
        logger.debug("Picard step %d for t%s", step + 1, spec.m)
    return FlowTrajectory(state, spec)


def conserved_quantity(L: OpTuple, k: Sequence[int]) -> Fraction:
    """
    H_k(L) = res(L_1^k_1 ... L_n^k_n).

    Raises:
        WindowTooSmall: the window does not reach the residue exponent
    """
    return op_residue(tuple_power(L, k, floor=(-1,) * L.n))


def conserved_series(L: OpTuple, k: Sequence[int]) -> XSeries:
    """H_k with the time parameters kept."""
    return op_residue_series(tuple_power(L, k, floor=(-1,) * L.n))


def is_time_free(value: XSeries) -> bool:
    return value.is_aux_constant()


def zs_residual(L: OpTuple, k: Sequence[int], m: Sequence[int], floor=None) -> PsdOp:
    """
    d(L^m)_+/dt_k - d(L^k)_+/dt_m - [(L^k)_+, (L^m)_+], time derivatives
    expanded through the flow equations.
    """
    word_k = exponent_word(k)
    word_m = exponent_word(m)
    Vk = vfield(L, k, floor=floor)
    Vm = vfield(L, m, floor=floor)
    dm_along_k = op_plus(word_derivative(L, Vk, word_m, floor=floor))
    dk_along_m = op_plus(word_derivative(L, Vm, word_k, floor=floor))
    bracket = op_commutator(
        op_plus(tuple_power(L, k, floor=floor)),
        op_plus(tuple_power(L, m, floor=floor)),
        floor=floor,
    )
    return op_sub(op_sub(dm_along_k, dk_along_m), bracket)


def zs_identity_check(L: OpTuple, k: Sequence[int], m: Sequence[int]) -> bool:
    """[(L^m)_-, (L^k)_-]_+ vanishes on commuting tuples."""
    minus_m = op_minus(tuple_power(L, m))
    minus_k = op_minus(tuple_power(L, k))
    return op_plus(op_commutator(minus_m, minus_k)).is_zero()


def sato_wilson_flow(S0: PsdOp, spec: FlowSpec, floor=None) -> SatoWilsonTrajectory:
    """
    dS/dt_m = -(S d^m S^-1)_- S, solved jointly with
    dS^-1/dt_m = S^-1 (S d^m S^-1)_- so no t-dependent inverse is needed.
    """
    n = S0.n
    S_inv0 = op_inverse(S0, floor=floor)
    param = spec.param
    S0 = S0.with_aux(S0.aux + (param,)) if param not in S0.aux else S0
    S_inv0 = S_inv0.with_aux(S0.aux)
    d_m = PsdOp.d_power(n, spec.m)
    S, S_inv = S0, S_inv0
    for step in range(spec.degree):
        A = op_minus(op_mul(op_mul(S, d_m), S_inv))
        S_next = op_add(S0, op_neg(op_mul(A, S)).aux_integrate(spec.time))
        S_inv_next = op_add(S_inv0, op_mul(S_inv, A).aux_integrate(spec.time))
        S, S_inv = S_next, S_inv_next
        logger.debug("Sato-Wilson Picard step %d", step + 1)
    return SatoWilsonTrajectory(S, S_inv, spec)


def _truncate_time(op: PsdOp, name: str, cap: int) -> PsdOp:
    coeffs = {d: xs_truncate_aux(s, name, cap) for d, s in op.coeffs.items()}
    aux = tuple(p if p.name != name else AuxParam(name, min(cap, p.cap)) for p in op.aux)
    return PsdOp(op.n, coeffs, op.window, aux)


def sw_induced_check(S0: PsdOp, spec: FlowSpec, floor=None) -> bool:
    """dL/dt_m = V^m(L) mod t^degree for L(t) induced by the Sato-Wilson flow."""
    trajectory = sato_wilson_flow(S0, spec, floor=floor)
    L = trajectory.induced()
    V = vfield(L, spec.m)
    cap = spec.degree - 1
    for slot, field in zip(L, V):
        lhs = _truncate_time(slot.aux_deriv(spec.time), spec.time, cap)
        rhs = _truncate_time(field, spec.time, cap)
        if not op_agrees(lhs, rhs):
            return False
    return True


def pprime_tangency_check(L: OpTuple, X: OpTuple) -> bool:
    """[X_i, L_j] = [X_j, L_i] for all pairs: X is tangent to the commuting locus."""
    for i in range(L.n):
        for j in range(i + 1, L.n):
            if not op_agrees(op_commutator(X[i], L[j]), op_commutator(X[j], L[i])):
                return False
    return True


def flow_commutation_check(L0: OpTuple, k: Sequence[int], m: Sequence[int], degree: int) -> bool:
    """
    Evolve in t_k (parameter s) then in t_m (parameter t), and in the other
    order; the two Taylor expansions in (s, t) must agree.
    """
    first_k = flow_taylor(L0, FlowSpec(k, degree, "s")).state
    k_then_m = flow_taylor(first_k, FlowSpec(m, degree, "t")).state
    first_m = flow_taylor(L0, FlowSpec(m, degree, "t")).state
    m_then_k = flow_taylor(first_m, FlowSpec(k, degree, "s")).state
    for a, b in zip(k_then_m, m_then_k):
        aux = (AuxParam("s", degree), AuxParam("t", degree))
        if not op_agrees(a.with_aux(aux), b.with_aux(aux)):
            return False
    return True


def kdv_tangency_check(L: OpTuple, word: Sequence[int], U: PsdOp) -> bool:
    """
    The field ([U_+, L_1], ..., [U_+, L_n]) keeps V(L)_- = 0 to first order,
    V the word product.

    Raises:
        ConstraintNotSatisfied: V(L)_- is nonzero to begin with
    """
    V = word_product(L, word)
    if not op_minus(V).is_zero():
        raise ConstraintNotSatisfied("V(L)_- is nonzero on the window")
    X = tuple_commutator(op_plus(U), L)
    return op_minus(word_derivative(L, X, word)).is_zero()
