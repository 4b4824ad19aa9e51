"""
Property Suite
==============
Seeded random operators and the algebraic properties the ``check``
subcommand verifies on them. Cases are independent and pure, so they are
fanned out to a thread pool; results are collected in case order and the
summary does not depend on scheduling.
"""

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

from config.config import CHECK_CONFIG, PERFORMANCE_CONFIG, SessionConfig
from models.dressing import conjugate_operator, conjugate_tuple, dress, residue_invariants_1d
from models.errors import NotInvertibleInE, PsdoError
from models.hierarchy import (
    FlowSpec,
    conserved_series,
    flow_commutation_check,
    flow_taylor,
    is_time_free,
    pprime_tangency_check,
    sw_induced_check,
    vfield,
    zs_residual,
)
from models.poisson import (
    Extractor,
    LinearFunctional,
    PolynomialFunctional,
    ResPowerFunctional,
    bracket_lie,
    bracket_r,
    grad_hk_closed,
)
from models.psdo import (
    OpTuple,
    PsdOp,
    dual_monomial,
    op_add,
    op_agrees,
    op_commutator,
    op_highest_term,
    op_inverse,
    op_mul,
    op_nu,
    op_order,
    op_pair,
    op_pow,
    op_residue,
    op_root,
    op_split,
    op_symbol,
    symbol_star,
)
from models.series import XSeries
from utils.parsing import canonical_terms, evaluate, format_operator

logger = logging.getLogger(__name__)


def random_fraction(rng: random.Random) -> Fraction:
    value = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
    return value if value != 0 else Fraction(1)


def random_series(rng: random.Random, n: int, max_terms: int, max_xdeg: int,
                  laurent: bool = False) -> XSeries:
    """A polynomial (or Laurent polynomial) with up to ``max_terms`` terms."""
    low = -1 if laurent else 0
    table = {}
    for _ in range(rng.randint(1, max_terms)):
        exps = tuple(rng.randint(low, max_xdeg) for _ in range(n))
        table[exps] = table.get(exps, 0) + random_fraction(rng)
    return XSeries.make(n, table, taylor=not laurent)


def d_range(floor) -> List[Tuple[int, int]]:
    """d-exponent ranges whose pairwise products stay above the floor."""
    return [(-min(2, -f // 2), 2) for f in floor]


def random_operator(rng: random.Random, cfg, laurent: bool = False, max_terms: int = None,
                    max_xdeg: int = None) -> PsdOp:
    max_terms = max_terms or CHECK_CONFIG["max_terms"]
    max_xdeg = max_xdeg if max_xdeg is not None else CHECK_CONFIG["max_xdeg"]
    n = cfg.n
    ranges = d_range(cfg.dfloor)
    coeffs = {}
    for _ in range(rng.randint(1, max_terms)):
        dexp = tuple(rng.randint(lo, hi) for lo, hi in ranges)
        coeffs[dexp] = random_series(rng, n, max_terms, max_xdeg, laurent)
    return PsdOp.make(n, coeffs)


def random_monic(rng: random.Random, cfg, order: int = 1) -> PsdOp:
    """d_n^order plus Taylor lower-order terms in d_n."""
    n = cfg.n
    top = tuple(order if c == n - 1 else 0 for c in range(n))
    coeffs = {top: XSeries.constant(n, 1, taylor=True)}
    for k in range(1, rng.randint(1, 2) + 1):
        dexp = tuple(order - k if c == n - 1 else 0 for c in range(n))
        coeffs[dexp] = random_series(rng, n, 2, CHECK_CONFIG["max_xdeg"])
    return PsdOp.make(n, coeffs)


def random_dressing(rng: random.Random, cfg) -> PsdOp:
    """S = 1 + b_1 d_n^-1 + b_2 d_n^-2 with Taylor polynomial b_k."""
    n = cfg.n
    coeffs = {(0,) * n: XSeries.constant(n, 1, taylor=True)}
    for k in (1, 2):
        dexp = tuple(-k if c == n - 1 else 0 for c in range(n))
        coeffs[dexp] = random_series(rng, n, 2, CHECK_CONFIG["max_xdeg"])
    return PsdOp.make(n, coeffs)


def random_index(rng: random.Random, n: int, total: int) -> Tuple[int, ...]:
    """A nonzero multi-index with entries summing to at most ``total``."""
    index = [0] * n
    for _ in range(rng.randint(1, total)):
        index[rng.randrange(n)] += 1
    return tuple(index)


def dressed_point(rng: random.Random, cfg, floor) -> OpTuple:
    """(S^-1 d_1 S, ..., S^-1 d_n S) for a random dressing operator S."""
    return conjugate_tuple(random_dressing(rng, cfg), floor)


def separated_point(rng: random.Random, n: int, floor) -> OpTuple:
    """
    L_i = d_i + a_i d_i^-1 + b_i d_i^-2 with Laurent a_i, b_i in x_i alone.

    Slots in different variables commute, so the point lies on the
    commuting locus without being dressed from the generators.
    """
    slots = []
    for i in range(n):
        op = PsdOp.d(n, i)
        for k in (1, 2):
            table = {}
            for _ in range(rng.randint(1, 2)):
                exps = tuple(rng.randint(-2, 1) if c == i else 0 for c in range(n))
                table[exps] = table.get(exps, 0) + random_fraction(rng)
            dexp = tuple(-k if c == i else 0 for c in range(n))
            op = op_add(op, PsdOp.make(n, {dexp: XSeries.make(n, table, taylor=False)}))
        slots.append(op.with_floor(floor))
    return OpTuple(tuple(slots))


def one_variable(cfg) -> SessionConfig:
    """The session restricted to its first variable."""
    return SessionConfig(n=1, xmax=cfg.xmax[:1], dfloor=cfg.dfloor[:1], seed=cfg.seed)


def deepened(cfg, depth: int) -> Tuple[int, ...]:
    return tuple(min(f, -depth) for f in cfg.dfloor)


# Properties: each takes (rng, cfg) and returns True when the property holds.


def check_associativity(rng, cfg) -> bool:
    L, M, N = (random_operator(rng, cfg) for _ in range(3))
    floor = cfg.dfloor
    left = op_mul(op_mul(L, M, floor=floor), N, floor=floor)
    right = op_mul(L, op_mul(M, N, floor=floor), floor=floor)
    return op_agrees(left, right)


def check_distributivity(rng, cfg) -> bool:
    L, M, N = (random_operator(rng, cfg) for _ in range(3))
    floor = cfg.dfloor
    left = op_mul(L, op_add(M, N), floor=floor)
    right = op_add(op_mul(L, M, floor=floor), op_mul(L, N, floor=floor))
    return op_agrees(left, right)


def check_symbol_product(rng, cfg) -> bool:
    L, M = random_operator(rng, cfg), random_operator(rng, cfg)
    floor = cfg.dfloor
    star = symbol_star(op_symbol(L), op_symbol(M), floor=floor).as_operator()
    return op_agrees(star, op_mul(L, M, floor=floor))


def check_order_additive(rng, cfg) -> bool:
    L, M = random_operator(rng, cfg), random_operator(rng, cfg)
    product = op_mul(L, M, floor=cfg.dfloor)
    expected = tuple(a + b for a, b in zip(op_nu(L), op_nu(M)))
    return op_nu(product) == expected


def check_truncation_sound(rng, cfg) -> bool:
    """A product on a deeper floor agrees with the shallow one where both are known."""
    L, M = random_operator(rng, cfg), random_operator(rng, cfg)
    shallow = op_mul(L, M, floor=cfg.dfloor)
    deep = op_mul(L, M, floor=tuple(f - 2 for f in cfg.dfloor))
    return op_agrees(shallow, deep)


def check_root(rng, cfg) -> bool:
    m = rng.randint(2, 3)
    M = random_monic(rng, cfg)
    floor = cfg.dfloor
    L = op_pow(M, m, floor=floor)
    root = op_root(L, m, floor=floor, xcap=cfg.xmax)
    return op_agrees(root, M)


def check_pairing_symmetric(rng, cfg) -> bool:
    L = random_operator(rng, cfg, laurent=True)
    M = random_operator(rng, cfg, laurent=True)
    return op_pair(L, M) == op_pair(M, L)


def check_dual_basis(rng, cfg) -> bool:
    n = cfg.n
    alpha = tuple(rng.randint(0, 2) for _ in range(n))
    beta = tuple(rng.randint(0, 2) for _ in range(n))
    floor = tuple(-(2 * b + 2) for b in beta)
    dual = dual_monomial(alpha, beta, floor)
    return op_pair(PsdOp.monomial(n, alpha, beta), dual) == 1


def check_commutator_residue(rng, cfg) -> bool:
    """res [L, M] = 0."""
    L = random_operator(rng, cfg, laurent=True)
    M = random_operator(rng, cfg, laurent=True)
    return op_residue(op_commutator(L, M, floor=(-1,) * cfg.n)) == 0


def check_dressing(rng, cfg) -> bool:
    S = random_dressing(rng, cfg)
    T = conjugate_tuple(S, cfg.dfloor)
    result = dress(T, depth=-cfg.dfloor[-1] - 1 or 1)
    if not result.verified:
        return False
    rebuilt = conjugate_tuple(result.S, cfg.dfloor)
    return all(op_agrees(a, b) for a, b in zip(rebuilt, T))


def check_roundtrip(rng, cfg) -> bool:
    L = random_operator(rng, cfg, laurent=rng.random() < 0.5)
    parsed = evaluate(format_operator(L), cfg)
    return canonical_terms(parsed) == canonical_terms(L)


def check_commutator_order(rng, cfg) -> bool:
    """ord [L, M] <= ord L + ord M - 1 in one variable."""
    one = one_variable(cfg)
    L, M = random_operator(rng, one), random_operator(rng, one)
    if L.is_zero() or M.is_zero():
        return True
    bracket = op_commutator(L, M, floor=one.dfloor)
    if bracket.is_zero():
        return True
    return op_order(bracket) <= op_order(L) + op_order(M) - 1


def check_order_drop(rng, cfg) -> bool:
    """ord [d1, d2 + a(x1) d2^-k] = -k, below ord L + ord M - 1 = 0."""
    k, j = rng.randint(1, 4), rng.randint(1, 3)
    a = PsdOp.monomial(2, (j, 0), (0, -k), rng.choice([-2, -1, 1, 3]))
    M = op_add(PsdOp.d(2, 1), a)
    bracket = op_commutator(PsdOp.d(2, 0), M, floor=(-k - 1, -k - 1))
    return op_order(bracket) == -k < op_order(PsdOp.d(2, 0)) + op_order(M) - 1


def check_inverse_criterion(rng, cfg) -> bool:
    """An E-type operator is invertible in E iff its highest coefficient is a unit."""
    L = random_operator(rng, cfg)
    if L.is_zero():
        return True
    head = op_highest_term(L)
    unit = next(iter(head.coeffs.values())).coefficient((0,) * cfg.n) != 0
    try:
        inverse = op_inverse(L, floor=cfg.dfloor, xcap=cfg.xmax)
    except NotInvertibleInE:
        return not unit
    if not unit:
        return False
    product = op_mul(L, inverse, floor=cfg.dfloor)
    return inverse.is_e_type() and op_agrees(product, PsdOp.identity(cfg.n))


def check_inverse_window(rng, cfg) -> bool:
    L = random_monic(rng, cfg)
    shallow = op_inverse(L, floor=cfg.dfloor, xcap=cfg.xmax)
    deep = op_inverse(L, floor=tuple(f - 2 for f in cfg.dfloor), xcap=cfg.xmax)
    return op_agrees(shallow, deep)


def check_root_window(rng, cfg) -> bool:
    L = op_pow(random_monic(rng, cfg), 2)
    shallow = op_root(L, 2, floor=cfg.dfloor, xcap=cfg.xmax)
    deep = op_root(L, 2, floor=tuple(f - 2 for f in cfg.dfloor), xcap=cfg.xmax)
    return op_agrees(shallow, deep)


def check_split_window(rng, cfg) -> bool:
    L, M = random_operator(rng, cfg), random_operator(rng, cfg)
    shallow = op_split(op_mul(L, M, floor=cfg.dfloor))
    deep = op_split(op_mul(L, M, floor=tuple(f - 2 for f in cfg.dfloor)))
    return all(op_agrees(a, b) for a, b in zip(shallow, deep))


def check_residue_window(rng, cfg) -> bool:
    L = random_operator(rng, cfg, laurent=True)
    M = random_operator(rng, cfg, laurent=True)
    n = cfg.n
    return op_residue(op_mul(L, M, floor=(-1,) * n)) == op_residue(op_mul(L, M, floor=(-3,) * n))


def check_conservation(rng, cfg) -> bool:
    """H_(1,...,1) is time-free along a random flow through a commuting point."""
    n = cfg.n
    L = separated_point(rng, n, deepened(cfg, 8))
    state = flow_taylor(L, FlowSpec(random_index(rng, n, 2), degree=2)).state
    return is_time_free(conserved_series(state, (1,) * n))


def check_zero_curvature(rng, cfg) -> bool:
    n = cfg.n
    L = dressed_point(rng, cfg, deepened(cfg, 6))
    return zs_residual(L, random_index(rng, n, 1), random_index(rng, n, 2)).is_zero()


def check_sato_wilson(rng, cfg) -> bool:
    spec = FlowSpec(random_index(rng, cfg.n, 2), degree=2)
    return sw_induced_check(random_dressing(rng, cfg), spec, floor=deepened(cfg, 8))


def check_flows_commute(rng, cfg) -> bool:
    n = cfg.n
    L = dressed_point(rng, cfg, deepened(cfg, 10))
    return flow_commutation_check(L, random_index(rng, n, 1), random_index(rng, n, 2), degree=2)


def check_tangency(rng, cfg) -> bool:
    L = dressed_point(rng, cfg, deepened(cfg, 6))
    return pprime_tangency_check(L, vfield(L, random_index(rng, cfg.n, 2)))


def check_closed_gradient(rng, cfg) -> bool:
    """The closed form of grad H_k agrees with the cyclic sum on commuting points."""
    L = dressed_point(rng, cfg, deepened(cfg, 6))
    k = random_index(rng, cfg.n, 3)
    closed = grad_hk_closed(L, k)
    cyclic = ResPowerFunctional(k).gradient(L)
    return all(op_agrees(a, b) for a, b in zip(closed, cyclic))


def check_linear_gradient(rng, cfg) -> bool:
    """grad <L, M> = M."""
    one = one_variable(cfg)
    L = separated_point(rng, 1, deepened(one, 6))
    M = OpTuple((random_operator(rng, one, laurent=True),))
    return op_agrees(LinearFunctional(M).gradient(L)[0], M[0])


def check_adjointness(rng, cfg) -> bool:
    """<[X, Y], Z> = <X, [Y, Z]>."""
    X, Y, Z = (random_operator(rng, cfg, laurent=True) for _ in range(3))
    floor = deepened(cfg, 6)
    left = op_pair(op_commutator(X, Y, floor=floor), Z)
    right = op_pair(X, op_commutator(Y, Z, floor=floor))
    return left == right


def check_jacobi(rng, cfg) -> bool:
    """The Lie-Poisson bracket of linear functionals satisfies the Jacobi identity."""
    one = one_variable(cfg)
    floor = deepened(one, 8)
    L = separated_point(rng, 1, floor)
    A, B, C = (random_operator(rng, one, laurent=True) for _ in range(3))
    total = Fraction(0)
    for first, second, third in ((A, B, C), (B, C, A), (C, A, B)):
        inner = LinearFunctional(OpTuple((op_commutator(second, third, floor=floor),)))
        total += bracket_lie(LinearFunctional(OpTuple((first,))), inner, L)
    return total == 0


def check_hamiltonian_casimir(rng, cfg) -> bool:
    """{H_k, F} = 0 for a polynomial functional F on a commuting point."""
    n = cfg.n
    floor = deepened(cfg, 8)
    L = separated_point(rng, n, floor)
    extractor = Extractor(
        rng.randrange(n),
        tuple(rng.randint(-2, 1) for _ in range(n)),
        tuple(rng.randint(-3, 0) for _ in range(n)),
    )
    F = PolynomialFunctional({((extractor, rng.randint(1, 2)),): random_fraction(rng)})
    return bracket_lie(ResPowerFunctional(random_index(rng, n, 2)), F, L) == 0


def check_involution(rng, cfg) -> bool:
    """{H_k, H_l}_R = 0 on a commuting point."""
    n = cfg.n
    L = separated_point(rng, n, deepened(cfg, 8))
    k = random_index(rng, n, 2)
    l = random_index(rng, n, 3)
    return bracket_r(ResPowerFunctional(k), ResPowerFunctional(l), L) == 0


def check_residue_invariants(rng, cfg) -> bool:
    """res L^j is unchanged by conjugation with S in 1 + E_-."""
    one = one_variable(cfg)
    floor = deepened(one, 8)
    L = separated_point(rng, 1, floor)[0]
    M = conjugate_operator(L, random_dressing(rng, one), floor=floor)
    return residue_invariants_1d(L, 2) == residue_invariants_1d(M, 2)


@dataclass(frozen=True)
class Property:
    name: str
    check: Callable
    cases_key: str


PROPERTIES: Tuple[Property, ...] = (
    Property("associativity", check_associativity, "algebra_cases"),
    Property("distributivity", check_distributivity, "algebra_cases"),
    Property("symbol_product", check_symbol_product, "algebra_cases"),
    Property("order_additive", check_order_additive, "order_cases"),
    Property("truncation_sound", check_truncation_sound, "soundness_cases"),
    Property("root", check_root, "root_cases"),
    Property("pairing_symmetric", check_pairing_symmetric, "pairing_cases"),
    Property("dual_basis", check_dual_basis, "pairing_cases"),
    Property("commutator_residue", check_commutator_residue, "pairing_cases"),
    Property("dressing", check_dressing, "dressing_cases"),
    Property("roundtrip", check_roundtrip, "roundtrip_cases"),
    Property("commutator_order", check_commutator_order, "order_cases"),
    Property("order_drop", check_order_drop, "order_cases"),
    Property("inverse_criterion", check_inverse_criterion, "root_cases"),
    Property("inverse_window", check_inverse_window, "soundness_cases"),
    Property("root_window", check_root_window, "soundness_cases"),
    Property("split_window", check_split_window, "soundness_cases"),
    Property("residue_window", check_residue_window, "soundness_cases"),
    Property("conservation", check_conservation, "hierarchy_cases"),
    Property("zero_curvature", check_zero_curvature, "hierarchy_cases"),
    Property("sato_wilson", check_sato_wilson, "hierarchy_cases"),
    Property("flows_commute", check_flows_commute, "hierarchy_cases"),
    Property("tangency", check_tangency, "hierarchy_cases"),
    Property("closed_gradient", check_closed_gradient, "poisson_cases"),
    Property("linear_gradient", check_linear_gradient, "poisson_cases"),
    Property("adjointness", check_adjointness, "poisson_cases"),
    Property("jacobi", check_jacobi, "poisson_cases"),
    Property("hamiltonian_casimir", check_hamiltonian_casimir, "poisson_cases"),
    Property("involution", check_involution, "poisson_cases"),
    Property("residue_invariants", check_residue_invariants, "dressing_cases"),
)


@dataclass
class PropertyResult:
    name: str
    passed: int = 0
    failed: List[int] = field(default_factory=list)
    errors: Dict[int, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failed and not self.errors

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "failed": list(self.failed),
            "errors": {str(k): v for k, v in sorted(self.errors.items())},
        }


def _run_case(prop: Property, seed: int, case: int, cfg):
    rng = random.Random(f"{prop.name}:{seed}:{case}")
    try:
        return case, bool(prop.check(rng, cfg)), None
    except PsdoError as exc:
        return case, False, exc.code


def run_property(prop: Property, cfg, cases: int = None, executor=None) -> PropertyResult:
    """Run ``cases`` seeded cases of one property."""
    cases = cases if cases is not None else CHECK_CONFIG[prop.cases_key]
    if executor is None:
        outcomes = [_run_case(prop, cfg.seed, case, cfg) for case in range(cases)]
    else:
        outcomes = list(
            executor.map(lambda case: _run_case(prop, cfg.seed, case, cfg), range(cases))
        )
    result = PropertyResult(prop.name)
    for case, passed, code in outcomes:
        if code is not None:
            result.errors[case] = code
        elif passed:
            result.passed += 1
        else:
            result.failed.append(case)
    logger.info("%s: %d/%d passed", prop.name, result.passed, cases)
    return result


def run_suite(cfg, scale: float = 1.0, names=None) -> Dict[str, PropertyResult]:
    """
    Run every property (or the named ones) with the config's seed.

    Args:
        cfg (SessionConfig): session; its seed fixes every case
        scale (float): multiplier on the CHECK_CONFIG case counts
        names (iterable, optional): restrict to these properties

    Returns:
        Dict[str, PropertyResult]: results keyed by property name, in suite order
    """
    selected = [p for p in PROPERTIES if names is None or p.name in names]
    results = {}
    with ThreadPoolExecutor(max_workers=PERFORMANCE_CONFIG["check_workers"]) as executor:
        for prop in selected:
            cases = max(1, int(CHECK_CONFIG[prop.cases_key] * scale))
            results[prop.name] = run_property(prop, cfg, cases, executor)
    return results
