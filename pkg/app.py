"""
psdo command line
=================
Batch driver for the pseudo-differential operator kernel.

    psdo [--config FILE] [--n N] [--xmax K,...] [--dfloor F,...] [--seed S]
         [--json] [--verbose] SUBCOMMAND ARGS...

Every subcommand parses its operator expressions with the session settings,
runs one kernel computation and prints a text or JSON report. Exit codes:
0 success, 1 mathematical error (or a failed property check), 2 usage or
parse error.
"""

import functools
import logging

import click

from config.config import APP_CONFIG, configure_logging, load_session_config, parse_int_list
from models.dressing import (
    centralizer_normal_form,
    conjugacy_witness_1d,
    dress,
    residue_invariants_1d,
)
from models.errors import ConfigError, PsdoError, UsageError
from models.hierarchy import (
    FlowSpec,
    conserved_quantity,
    conserved_series,
    flow_taylor,
    is_time_free,
    sato_wilson_flow,
    sw_induced_check,
    zs_residual,
)
from models.poisson import (
    ResPowerFunctional,
    SplittingConfig,
    bracket_lie,
    bracket_r,
    combined_hamiltonian_flow_n2,
    f_gradient,
    hamiltonian_flow,
)
from models.psdo import (
    OpTuple,
    op_agrees,
    op_commutator,
    op_inverse,
    op_mul,
    op_nu,
    op_order,
    op_pair,
    op_residue,
    op_root,
    op_split,
    op_split_x,
    op_symbol,
    symbol_star,
)
from utils.checks import PROPERTIES, run_suite
from utils.parsing import evaluate, format_operator
from utils.reporting import Report, terms_payload

logger = logging.getLogger(__name__)


class IntList(click.ParamType):
    """Comma-separated integers, e.g. ``2,0``."""

    name = "ints"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return tuple(value)
        try:
            return tuple(parse_int_list(value))
        except ConfigError as exc:
            self.fail(exc.message, param, ctx)


INT_LIST = IntList()


def subcommand(func):
    """
    Wrap a subcommand body returning (result, extras) into report handling.

    PsdoError is caught and reported by name; anything else propagates.
    """

    @click.pass_context
    @functools.wraps(func)
    def wrapper(ctx, *args, **kwargs):
        cfg = ctx.obj["cfg"]
        name = ctx.info_name
        try:
            outcome = func(cfg, *args, **kwargs)
            report = outcome if isinstance(outcome, Report) else Report(name, cfg.n, *outcome)
        except PsdoError as exc:
            report = Report.failure(name, cfg.n, exc)
        click.echo(report.render(cfg.output))
        ctx.exit(report.exit_code)

    return wrapper


def operand(cfg, src):
    return evaluate(src, cfg)


def operand_tuple(cfg, sources) -> OpTuple:
    if len(sources) != cfg.n:
        raise UsageError(f"expected {cfg.n} operators, got {len(sources)}")
    return OpTuple(tuple(evaluate(src, cfg) for src in sources))


def index_vector(cfg, values, label):
    if values is None:
        raise UsageError(f"--{label} is required")
    if len(values) == 1 and cfg.n > 1:
        values = tuple(values) * cfg.n
    if len(values) != cfg.n:
        raise UsageError(f"--{label} needs {cfg.n} entries, got {len(values)}")
    return tuple(values)


def default_depth(cfg) -> int:
    return max(1, -cfg.dfloor[-1] - 1)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Flat JSON/YAML config file.")
@click.option("--n", type=int, help="Number of variables.")
@click.option("--xmax", type=str, help="x-degree caps, comma separated.")
@click.option("--dfloor", type=str, help="d-floors, comma separated (each <= 0).")
@click.option("--seed", type=int, help="Seed for the property suite.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON reports.")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
@click.version_option(APP_CONFIG["version"], prog_name=APP_CONFIG["name"])
@click.pass_context
def main(ctx, config_path, n, xmax, dfloor, seed, as_json, verbose):
    """Formal pseudo-differential operators over iterated Laurent series."""
    configure_logging(verbose)
    try:
        cfg = load_session_config(
            config_path,
            n=n,
            xmax=xmax,
            dfloor=dfloor,
            seed=seed,
            output="json" if as_json else None,
        )
    except ConfigError as exc:
        click.echo(f"error: {exc.code}: {exc.message}", err=True)
        ctx.exit(exc.exit_code)
    logger.debug("session %s", cfg.to_dict())
    ctx.obj = {"cfg": cfg}


# Operator algebra


@main.command()
@click.argument("exprs", nargs=-1, required=True)
@subcommand
def mul(cfg, exprs):
    """Product of the operators, left to right."""
    ops = [operand(cfg, src) for src in exprs]
    return functools.reduce(lambda a, b: op_mul(a, b, floor=cfg.dfloor), ops), {}


@main.command()
@click.argument("left")
@click.argument("right")
@subcommand
def comm(cfg, left, right):
    """Commutator [A, B]."""
    return op_commutator(operand(cfg, left), operand(cfg, right), floor=cfg.dfloor), {}


@main.command(name="ord")
@click.argument("expr")
@subcommand
def order_command(cfg, expr):
    """Order in d_n."""
    return op_order(operand(cfg, expr)), {}


@main.command()
@click.argument("expr")
@subcommand
def nu(cfg, expr):
    """Exponent vector of the highest term."""
    return list(op_nu(operand(cfg, expr))), {}


@main.command()
@click.argument("expr")
@click.option("--x-index", type=int, default=None, help="Split by x_i-exponent instead (1-based).")
@click.option("--threshold", type=int, default=1, show_default=True)
@subcommand
def split(cfg, expr, x_index, threshold):
    """Projections onto the two halves of the splitting."""
    L = operand(cfg, expr)
    if x_index is None:
        plus, minus = op_split(L)
    else:
        plus, minus = op_split_x(L, x_index - 1, threshold)
    return None, {"plus": plus, "minus": minus}


@main.command()
@click.argument("expr")
@subcommand
def res(cfg, expr):
    """Residue: coefficient of x^-1 d^-1."""
    return op_residue(operand(cfg, expr)), {}


@main.command()
@click.argument("left")
@click.argument("right")
@subcommand
def pair(cfg, left, right):
    """Pairing <A, B> = res(AB)."""
    return op_pair(operand(cfg, left), operand(cfg, right)), {}


@main.command()
@click.argument("expr")
@subcommand
def inv(cfg, expr):
    """Inverse on the session floor."""
    return op_inverse(operand(cfg, expr), floor=cfg.dfloor, xcap=cfg.xmax), {}


@main.command()
@click.argument("expr")
@click.argument("m", type=int)
@subcommand
def root(cfg, expr, m):
    """Principal m-th root."""
    return op_root(operand(cfg, expr), m, floor=cfg.dfloor, xcap=cfg.xmax), {}


@main.command()
@click.argument("expr")
@subcommand
def symbol(cfg, expr):
    """Total symbol, d_i read as z_i."""
    sym = op_symbol(operand(cfg, expr)).as_operator()
    return format_operator(sym, d_name="z"), {"terms": terms_payload(sym)}


@main.command()
@click.argument("left")
@click.argument("right")
@subcommand
def star(cfg, left, right):
    """Symbol product, checked against the operator product."""
    L, M = operand(cfg, left), operand(cfg, right)
    product = symbol_star(op_symbol(L), op_symbol(M), floor=cfg.dfloor).as_operator()
    agrees = op_agrees(product, op_mul(L, M, floor=cfg.dfloor))
    return format_operator(product, d_name="z"), {
        "terms": terms_payload(product),
        "agrees_with_product": agrees,
    }


# Conjugacy


@main.command(name="dress")
@click.argument("exprs", nargs=-1, required=True)
@click.option("--depth", type=int, default=None, help="Number of d_n-orders to correct.")
@subcommand
def dress_command(cfg, exprs, depth):
    """Dressing operator S with S L_i S^-1 = d_i."""
    result = dress(operand_tuple(cfg, exprs), depth or default_depth(cfg))
    return result.S, {
        "S_inverse": result.S_inverse,
        "verified": result.verified,
        "depth": result.depth,
        "steps": len(result.steps),
    }


@main.command()
@click.argument("left")
@click.argument("right")
@click.option("--depth", type=int, default=None)
@click.option("--invariants", is_flag=True, help="Also report res(L^(j/k)), |j| <= 2.")
@subcommand
def conj1d(cfg, left, right, depth, invariants):
    """One-variable conjugacy: witness S with S^-1 L S = M."""
    L, M = operand(cfg, left), operand(cfg, right)
    witness = conjugacy_witness_1d(L, M, depth or default_depth(cfg))
    extras = {"witness": witness}
    if invariants:
        extras["invariants"] = {
            "left": residue_invariants_1d(L, 2),
            "right": residue_invariants_1d(M, 2),
        }
    return None, extras


@main.command()
@click.argument("z_expr")
@click.argument("exprs", nargs=-1, required=True)
@click.option("--depth", type=int, default=None)
@subcommand
def centralizer(cfg, z_expr, exprs, depth):
    """Normal form S Z S^-1 of Z in the centralizer of the tuple."""
    result = dress(operand_tuple(cfg, exprs), depth or default_depth(cfg))
    Z = operand(cfg, z_expr)
    return centralizer_normal_form(Z, result.S, result.S_inverse), {}


# Hierarchy


@main.command()
@click.argument("exprs", nargs=-1, required=True)
@click.option("--m", "m_values", type=INT_LIST, required=True, help="Time index, e.g. 2,0.")
@click.option("--degree", type=int, default=1, show_default=True)
@subcommand
def flow(cfg, exprs, m_values, degree):
    """Taylor solution of dL/dt_m = V^m(L)."""
    spec = FlowSpec(index_vector(cfg, m_values, "m"), degree)
    trajectory = flow_taylor(operand_tuple(cfg, exprs), spec)
    return trajectory.state, {}


@main.command()
@click.argument("exprs", nargs=-1, required=True)
@click.option("--k", "k_values", type=INT_LIST, required=True)
@click.option("--m", "m_values", type=INT_LIST, default=None, help="Also follow this flow.")
@click.option("--degree", type=int, default=1, show_default=True)
@subcommand
def conserve(cfg, exprs, k_values, m_values, degree):
    """H_k = res(L^k), optionally along a flow."""
    L = operand_tuple(cfg, exprs)
    k = index_vector(cfg, k_values, "k")
    extras = {"invariants": {"H": conserved_quantity(L, k)}}
    if m_values is not None:
        spec = FlowSpec(index_vector(cfg, m_values, "m"), degree)
        series = conserved_series(flow_taylor(L, spec).state, k)
        extras["invariants"]["along_flow"] = series
        extras["invariants"]["time_free"] = is_time_free(series)
    return None, extras


@main.command()
@click.argument("exprs", nargs=-1, required=True)
@click.option("--k", "k_values", type=INT_LIST, required=True)
@click.option("--m", "m_values", type=INT_LIST, required=True)
@subcommand
def zs(cfg, exprs, k_values, m_values):
    """Zakharov-Shabat residual for the times t_k, t_m."""
    L = operand_tuple(cfg, exprs)
    residual = zs_residual(
        L, index_vector(cfg, k_values, "k"), index_vector(cfg, m_values, "m"), floor=cfg.dfloor
    )
    return None, {"residual": residual, "vanishes": residual.is_zero()}


@main.command()
@click.argument("expr")
@click.option("--m", "m_values", type=INT_LIST, required=True)
@click.option("--degree", type=int, default=1, show_default=True)
@subcommand
def sw(cfg, expr, m_values, degree):
    """Sato-Wilson flow of a dressing operator."""
    S0 = operand(cfg, expr)
    spec = FlowSpec(index_vector(cfg, m_values, "m"), degree)
    trajectory = sato_wilson_flow(S0, spec, floor=cfg.dfloor)
    return trajectory.S, {
        "S_inverse": trajectory.S_inverse,
        "induces_kp_flow": sw_induced_check(S0, spec, floor=cfg.dfloor),
    }


# Poisson structures


@main.command()
@click.argument("exprs", nargs=-1, required=True)
@click.option("--k", "k_values", type=INT_LIST, required=True)
@subcommand
def grad(cfg, exprs, k_values):
    """Gradient of H_k."""
    H = ResPowerFunctional(index_vector(cfg, k_values, "k"))
    return f_gradient(H, operand_tuple(cfg, exprs), floor=cfg.dfloor), {}


@main.command()
@click.argument("exprs", nargs=-1, required=True)
@click.option("--k", "k_values", type=INT_LIST, required=True)
@click.option("--j", "j_values", type=INT_LIST, required=True)
@subcommand
def bracket(cfg, exprs, k_values, j_values):
    """Lie-Poisson bracket {H_k, H_j}."""
    F = ResPowerFunctional(index_vector(cfg, k_values, "k"))
    G = ResPowerFunctional(index_vector(cfg, j_values, "j"))
    return bracket_lie(F, G, operand_tuple(cfg, exprs), floor=cfg.dfloor), {}


@main.command()
@click.argument("exprs", nargs=-1, required=True)
@click.option("--k", "k_values", type=INT_LIST, required=True)
@click.option("--j", "j_values", type=INT_LIST, required=True)
@click.option("--split", "kind", type=click.Choice(["standard", "x"]), default="standard")
@click.option("--x-index", type=int, default=1, show_default=True)
@click.option("--threshold", type=int, default=1, show_default=True)
@subcommand
def rbracket(cfg, exprs, k_values, j_values, kind, x_index, threshold):
    """R-matrix bracket {H_k, H_j}_R."""
    F = ResPowerFunctional(index_vector(cfg, k_values, "k"))
    G = ResPowerFunctional(index_vector(cfg, j_values, "j"))
    split = SplittingConfig(kind, x_index - 1, threshold)
    return bracket_r(F, G, operand_tuple(cfg, exprs), split, floor=cfg.dfloor), {}


@main.command()
@click.argument("exprs", nargs=-1, required=True)
@click.option("--k", "k_values", type=INT_LIST, default=None)
@click.option("--combined", type=int, default=None, help="n = 2: flow of the combined H_m.")
@subcommand
def hamflow(cfg, exprs, k_values, combined):
    """Hamiltonian vector field of H_k for the standard R-bracket."""
    L = operand_tuple(cfg, exprs)
    if combined is not None:
        return combined_hamiltonian_flow_n2(L, combined), {}
    return hamiltonian_flow(L, index_vector(cfg, k_values, "k")), {}


# Self-check


@main.command()
@click.option("--scale", type=float, default=1.0, show_default=True, help="Multiplier on case counts.")
@click.option(
    "--only",
    multiple=True,
    type=click.Choice([p.name for p in PROPERTIES]),
    help="Run only these properties.",
)
@subcommand
def check(cfg, scale, only):
    """Run the seeded property suite."""
    results = run_suite(cfg, scale=scale, names=set(only) or None)
    summary = {name: result.to_dict() for name, result in results.items()}
    ok = all(result.ok for result in results.values())
    return Report("check", cfg.n, extras={"seed": cfg.seed, "properties": summary}, failed=not ok)


if __name__ == "__main__":
    main()
