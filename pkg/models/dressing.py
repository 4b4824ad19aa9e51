"""
Dressing and Conjugacy
======================
Conjugation of commuting tuples L_i in d_i + E_- to the generators d_i by
successive approximation in powers of d_n, the gauge and centralizer
statements that follow from it, and the residue criterion for conjugacy of a
single operator in one variable.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from models.errors import (
    DimensionMismatch,
    IntegrationObstruction,
    NotCommuting,
    NotInCentralizer,
    OrderMismatch,
    ResidueObstruction,
    WindowTooSmall,
    WrongForm,
    WrongNormalForm,
)
from models.psdo import (
    OpTuple,
    PsdOp,
    op_agrees,
    op_commutator,
    op_inverse,
    op_mul,
    op_order,
    op_pow,
    op_residue,
    op_root,
    op_split,
    op_sub,
)
from models.series import INF, XSeries

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DressingStep:
    """One factor S_step = 1 - P with P = b d_n^order."""

    order: int
    P: PsdOp
    S_step: PsdOp


@dataclass(frozen=True)
class DressingResult:
    """
    S in 1 + E_- with S L_i S^-1 = d_i down to d_n-order ``depth``.

    ``S_inverse`` is the accumulated product of the steps, so L_i = S_inverse d_i S.
    """

    S: PsdOp
    depth: int
    verified: bool
    S_inverse: Optional[PsdOp] = None
    steps: Tuple[DressingStep, ...] = field(default_factory=tuple)


def commutativity_check(T: OpTuple) -> bool:
    """True iff [L_i, L_j] vanishes on the window for every pair."""
    for i in range(T.n):
        for j in range(i + 1, T.n):
            if not op_commutator(T[i], T[j]).is_zero():
                logger.debug("slots %d and %d do not commute", i + 1, j + 1)
                return False
    return True


def _working_floor(ops: Sequence[PsdOp], depth: int) -> Tuple:
    n = ops[0].n
    floor = []
    for c in range(n):
        value = max(op.window.dfloor[c] for op in ops)
        floor.append(value if value != -INF else -(depth + 1))
    return tuple(floor)


def _slice(op: PsdOp, order: int) -> Dict[Tuple[int, ...], XSeries]:
    """Coefficients of the d_n^order layer, keyed by full d-exponent."""
    return {d: s for d, s in op.coeffs.items() if d[-1] == order}


def integrate_gradient(layers: Sequence[Dict[Tuple[int, ...], XSeries]], n: int):
    """
    Solve d b / d x_i = a_i for every i, position by position.

    Integrate a_1 in x_1, then add x_1-free corrections for a_2, and so on;
    integration constants are 0.

    Raises:
        IntegrationObstruction: the a_i are not a gradient
    """
    positions = set()
    for layer in layers:
        positions |= set(layer)
    solution = {}
    for pos in positions:
        parts = [layer.get(pos) for layer in layers]
        template = next(p for p in parts if p is not None)
        parts = [p if p is not None else XSeries.zero(n, template.taylor, template.aux)
                 for p in parts]
        try:
            b = parts[0].antideriv(0)
            for i in range(1, n):
                rest = parts[i] - b.deriv(i)
                b = b + rest.antideriv(i)
        except ResidueObstruction as exc:
            raise IntegrationObstruction(f"cannot integrate the layer at {pos}: {exc}") from exc
        for i in range(n):
            if not b.deriv(i).agrees_with(parts[i]):
                raise IntegrationObstruction(
                    f"layer at {pos} is not a gradient (cross derivatives differ)"
                )
        if not b.is_zero():
            solution[pos] = b
    return solution


def _step_from(b_layer: Dict[Tuple[int, ...], XSeries], n: int, order: int, aux=()) -> DressingStep:
    P = PsdOp.make(n, b_layer, aux=aux) if b_layer else PsdOp.zero(n, aux)
    S_step = op_sub(PsdOp.identity(n, aux), P)
    return DressingStep(order, P, S_step)


def _conjugate_step(op: PsdOp, step: DressingStep) -> PsdOp:
    """S_step^-1 op S_step at the precision of op."""
    floor = tuple(f - t if f != -INF else f for f, t in zip(op.window.dfloor, op.window.dtop))
    inverse = op_inverse(step.S_step, floor=floor)
    return op_mul(op_mul(inverse, op), step.S_step)


def layer_equation_check(step: DressingStep) -> bool:
    """[d_i, P] = (d b / d x_i) d_n^order for every i."""
    n = step.P.n
    for i in range(n):
        lhs = op_commutator(PsdOp.d(n, i), step.P)
        rhs = step.P.map_coefficients(lambda s, i=i: s.deriv(i))
        if not op_agrees(lhs, rhs):
            return False
    return True


def dress(T: OpTuple, depth: int) -> DressingResult:
    """
    Find S in 1 + E_- with S L_i S^-1 = d_i.

    Args:
        T (OpTuple): commuting operators L_i in d_i + E_- with Taylor coefficients
        depth (int): number of d_n-orders to correct (orders -1 ... -depth)

    Returns:
        DressingResult: S, its inverse and the individual steps

    Raises:
        WrongForm: some L_i - d_i has terms of d_n-order >= 0, or is not E-type
        NotCommuting: some [L_i, L_j] is nonzero on the window
        IntegrationObstruction: an order could not be integrated
    """
    n = T.n
    if depth < 1:
        raise ValueError("depth must be positive")
    for i, op in enumerate(T):
        if not op.is_e_type():
            raise WrongForm(f"L{i + 1} has Laurent coefficients; E-type is required")
        plus, _ = op_split(op_sub(op, PsdOp.d(n, i)))
        if not plus.is_zero():
            raise WrongForm(f"L{i + 1} - d{i + 1} has terms of d{n}-order >= 0")
    if not commutativity_check(T):
        raise NotCommuting("the tuple does not commute on its window")

    floor = _working_floor(list(T), depth)
    current = [op.with_floor(floor) for op in T]
    aux = T[0].aux
    W = PsdOp.identity(n, aux)
    steps: List[DressingStep] = []
    lowest = -1
    for order in range(-1, -depth - 1, -1):
        if order < floor[-1]:
            logger.warning("window floor %s stops dressing at order %d", floor[-1], order + 1)
            break
        lowest = order
        layers = [_slice(op_sub(op, PsdOp.d(n, i)), order) for i, op in enumerate(current)]
        if not any(layers):
            continue
        b_layer = integrate_gradient(layers, n)
        step = _step_from(b_layer, n, order, aux)
        steps.append(step)
        current = [_conjugate_step(op, step) for op in current]
        W = op_mul(W, step.S_step, floor=tuple(f - 1 for f in floor))
        logger.debug("dressing order %d: %d layer positions", order, len(b_layer))

    verified = True
    for i, op in enumerate(current):
        rest = op_sub(op, PsdOp.d(n, i))
        if any(d[-1] >= lowest for d in rest.coeffs):
            verified = False
    S = op_inverse(W, floor=tuple(f - 1 for f in floor))
    return DressingResult(S=S, depth=lowest, verified=verified, S_inverse=W, steps=tuple(steps))


def conjugate_operator(L: PsdOp, S: PsdOp, floor=None, S_inverse=None) -> PsdOp:
    """S^-1 L S."""
    if floor is None:
        floor = L.window.dfloor
    floor = tuple(floor)
    inv_floor = tuple(f - t if f != -INF else f for f, t in zip(floor, L.window.dtop))
    if S_inverse is None:
        S_inverse = op_inverse(S, floor=inv_floor)
    return op_mul(op_mul(S_inverse, L, floor=floor), S, floor=floor)


def conjugate_tuple(S: PsdOp, floor) -> OpTuple:
    """(S^-1 d_1 S, ..., S^-1 d_n S) on d-floor ``floor``."""
    n = S.n
    floor = tuple(floor)
    inverse = op_inverse(S, floor=tuple(f - 1 for f in floor))
    slots = []
    for i in range(n):
        slot = op_mul(op_mul(inverse, PsdOp.d(n, i), floor=floor), S, floor=floor)
        slots.append(slot.with_floor(floor))
    return OpTuple(tuple(slots))


def gauge_quotient_check(S: PsdOp, S2: PsdOp, floor=None) -> bool:
    """True iff S2 S^-1 - 1 has only x-free coefficients on the window."""
    if floor is None:
        floor = tuple(max(a, b) for a, b in zip(S.window.dfloor, S2.window.dfloor))
    if any(f == -INF for f in floor):
        raise WindowTooSmall("gauge check needs a finite d-floor")
    quotient = op_mul(S2, op_inverse(S, floor=floor), floor=floor)
    rest = op_sub(quotient, PsdOp.identity(S.n, S.aux))
    return all(series.x_free() for series in rest.coeffs.values())


def centralizer_normal_form(Z: PsdOp, S: PsdOp, S_inverse: Optional[PsdOp] = None) -> PsdOp:
    """
    S Z S^-1, which must have constant coefficients.

    Raises:
        NotInCentralizer: some coefficient depends on x
    """
    SZ = op_mul(S, Z)
    if S_inverse is None:
        floor = tuple(
            f - t if f != -INF else f for f, t in zip(SZ.window.dfloor, SZ.window.dtop)
        )
        S_inverse = op_inverse(S, floor=floor)
    result = op_mul(SZ, S_inverse)
    for dexp, series in result.coeffs.items():
        if not series.x_free():
            raise NotInCentralizer(f"coefficient of d^{dexp} depends on x")
    return result


# One variable: the residue criterion


def _normal_form_order(L: PsdOp) -> int:
    if L.n != 1:
        raise DimensionMismatch("the residue criterion is for one variable")
    k = op_order(L)
    if k == 0:
        raise WrongNormalForm("order 0 operators are not covered")
    lead = L.coefficient((k,))
    if not (lead.x_free() and lead.coefficient((0,)) == 1 and len(lead.terms) == 1):
        raise WrongNormalForm(f"leading coefficient must be 1, got {dict(lead.terms)}")
    if not L.coefficient((k - 1,)).is_zero():
        raise WrongNormalForm(f"d^{k - 1} term must be absent")
    return k


def _first_order_root(L: PsdOp, k: int) -> PsdOp:
    """The root of L with highest term d (k > 0) or, inverted, d (k < 0)."""
    root = op_root(L, abs(k))
    if k < 0:
        root = op_inverse(root)
    return root


def residue_invariants_1d(L: PsdOp, depth: int) -> List[Fraction]:
    """
    res(L^(j/k)) for j = -depth ... depth, k = ord(L).

    Raises:
        WrongNormalForm: L is not d^k + (< k-1)
        WindowTooSmall: a power does not reach the residue exponent
    """
    k = _normal_form_order(L)
    root = op_root(L, abs(k))
    sign = 1 if k > 0 else -1
    values = []
    for j in range(-depth, depth + 1):
        values.append(op_residue(op_pow(root, j * sign)))
    return values


def conjugacy_witness_1d(L: PsdOp, M: PsdOp, depth: int) -> PsdOp:
    """
    S in 1 + P_- with S^-1 L S = M down to order -depth of the first-order roots.

    Both operators are reduced to their first-order roots; each step removes
    the highest remaining difference a d^m with S_step = 1 - b d^m, b' = a.

    Raises:
        OrderMismatch: ord L != ord M
        WrongNormalForm: an input is not d^k + (< k-1)
        ResidueObstruction: a difference carries an x^-1 term
    """
    k = _normal_form_order(L)
    k2 = _normal_form_order(M)
    if k != k2:
        raise OrderMismatch(f"orders differ: {k} and {k2}")
    current = _first_order_root(L, k)
    target = _first_order_root(M, k)
    W = PsdOp.identity(1, L.aux)
    for order in range(-1, -depth - 1, -1):
        diff = op_sub(current, target)
        if order < diff.window.dfloor[0]:
            logger.warning("window floor stops the conjugacy search at order %d", order + 1)
            break
        a = diff.coefficient((order,))
        if a.is_zero():
            continue
        try:
            b = a.antideriv(0)
        except ResidueObstruction as exc:
            raise ResidueObstruction(
                f"order {order} difference has a nonzero x^-1 term: residues differ"
            ) from exc
        step = _step_from({(order,): b}, 1, order, L.aux)
        current = _conjugate_step(current, step)
        W = op_mul(W, step.S_step, floor=tuple(f - 1 for f in current.window.dfloor))
        logger.debug("conjugacy step at order %d", order)
    return W
