"""Command-line interface.

Exit codes: 0 positive verdict or success, 1 negative verdict, 2 bad input.
Results are JSON (or CSV for tables and paths) on stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Callable, Optional, Sequence

import numpy as np

from . import io as bio
from .coupling import (
    check_strong_biased_coupling,
    construct_biased_coupling,
    glue,
    rows_biased,
    separating_payoff,
)
from .decomposition import decompose_biased
from .envelope import beta_envelope
from .errors import InputError, NegativeVerdict, NotInBiasedOrderError
from .market import MarketSpec, american_put_value, check_american_consistency, measure_from_put_curve
from .measure import BiasParams, DiscreteMeasure, potential_curve
from .order import OrderVerdict, is_beta_biased, is_strongly_beta_biased, max_bias
from .poisson import exact_terminal_law, plan_embedding, sample, sample_paths, strong_plan
from .tolerances import DEFAULT, Tolerances

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _loader(fn: Callable):
    def load(path):
        try:
            return fn(bio.load(path))
        except InputError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: malformed input ({exc})") from exc
    return load


load_measure = _loader(bio.measure_from_dict)
load_curve = _loader(bio.curve_from_dict)
load_coupling = _loader(bio.coupling_from_dict)
load_piecewise = _loader(bio.piecewise_from_dict)


def _tolerances(args) -> Tolerances:
    overrides = {}
    for item in args.tol or []:
        name, _, value = item.partition("=")
        if name not in Tolerances.__dataclass_fields__:
            raise InputError(f"unknown tolerance '{name}'")
        try:
            overrides[name] = float(value)
        except ValueError as exc:
            raise InputError(f"tolerance '{name}' needs a number") from exc
    return DEFAULT.with_overrides(**overrides)


def _verdict_result(v: OrderVerdict, **extra) -> tuple[int, str]:
    return (EXIT_OK if v.holds else EXIT_NEGATIVE), bio.dumps({**v.to_dict(), **extra})


# order

def cmd_order_check(args, tol):
    mu, nu = load_measure(args.mu), load_measure(args.nu)
    bp = BiasParams(args.beta)
    if mu.is_dirac():
        return _verdict_result(is_beta_biased(nu, mu.xs[0], bp, tol))
    try:
        pi = construct_biased_coupling(mu, nu, bp, tol)
    except NotInBiasedOrderError as err:
        _, sep = separating_payoff(mu, nu, bp, err)
        return _verdict_result(OrderVerdict(False, -sep, None, "no biased coupling; separating payoff found"))
    return _verdict_result(rows_biased(pi, bp, tol=tol))


def cmd_order_max_bias(args, tol):
    nu = load_measure(args.nu)
    return EXIT_OK, bio.dumps({"x": args.x, "max_bias": max_bias(nu, args.x, tols=tol)})


def cmd_order_strong_check(args, tol):
    mu, nu = load_measure(args.mu), load_measure(args.nu)
    bp = BiasParams(args.beta)
    if mu.is_dirac():
        return _verdict_result(is_strongly_beta_biased(nu, mu.xs[0], bp, tol))
    pi = check_strong_biased_coupling(mu, nu, bp, args.margin, tol)
    return _verdict_result(rows_biased(pi, bp, strong=True, tol=tol), coupling=bio.coupling_to_dict(pi))


# decomposition and couplings

def cmd_decompose(args, tol):
    nu = load_measure(args.nu)
    d = decompose_biased(nu, args.x, BiasParams(args.beta), strong=args.strong, tol=tol)
    return EXIT_OK, bio.dumps(bio.decomposition_to_dict(d))


def cmd_couple(args, tol):
    mu, nu = load_measure(args.mu), load_measure(args.nu)
    bp = BiasParams(args.beta)
    try:
        pi = construct_biased_coupling(mu, nu, bp, tol)
    except NotInBiasedOrderError as err:
        g, sep = separating_payoff(mu, nu, bp, err)
        return EXIT_NEGATIVE, bio.dumps({"feasible": False, "certificate": bio._nums(err.certificate),
                                         "separating_payoff": bio.piecewise_to_dict(g), "separation": sep})
    return EXIT_OK, bio.dumps({"feasible": True, **bio.coupling_to_dict(pi)})


def cmd_glue(args, tol):
    pi = glue(load_coupling(args.pi1), load_coupling(args.pi2), tol)
    return EXIT_OK, bio.dumps(bio.coupling_to_dict(pi))


# envelope

def cmd_envelope_eval(args, tol):
    g = load_piecewise(args.g)
    v = beta_envelope(g, BiasParams(args.beta), args.x)
    return EXIT_OK, bio.dumps({"x": args.x, "beta": args.beta, "value": bio._num(v),
                               "minus_infinity": bool(np.isneginf(v))})


def cmd_envelope_curve(args, tol):
    g = load_piecewise(args.g)
    bp = BiasParams(args.beta)
    xs = np.linspace(args.lo, args.hi, args.n)
    rows = [(x, g(x), beta_envelope(g, bp, float(x))) for x in xs]
    return EXIT_OK, bio.table_csv(["x", "g", "envelope"], rows)


# embedding

def _plan(args, tol):
    mu, nu = load_measure(args.mu), load_measure(args.nu)
    if args.strong:
        return strong_plan(mu, nu, args.beta, args.margin, tol)
    return plan_embedding(mu, nu, args.beta, tol)


def cmd_embed_plan(args, tol):
    return EXIT_OK, bio.dumps(bio.plan_to_dict(_plan(args, tol)))


def cmd_embed_exact_law(args, tol):
    return EXIT_OK, bio.dumps(bio.measure_to_dict(exact_terminal_law(_plan(args, tol))))


def cmd_embed_sample(args, tol):
    values = sample(_plan(args, tol), args.n, args.seed, threads=args.threads)
    return EXIT_OK, bio.terminal_csv(values)


def cmd_embed_paths(args, tol):
    plan = _plan(args, tol)
    grid = None if args.grid is None else np.linspace(0.0, plan.beta.t_beta, args.grid)
    return EXIT_OK, bio.trajectories_csv(sample_paths(plan, args.n, args.seed, grid))


# market

def cmd_market_recover(args, tol):
    return EXIT_OK, bio.dumps(bio.measure_to_dict(measure_from_put_curve(load_curve(args.curve), tol)))


def cmd_market_check(args, tol):
    rep = check_american_consistency(load_curve(args.curve), MarketSpec(args.s0, args.B1), tol)
    return _verdict_result(rep.verdict, k_tilde=rep.k_tilde,
                           max_bias=None if rep.max_bias is None else rep.max_bias,
                           beta_required=rep.beta_required)


def cmd_market_price(args, tol):
    m = MarketSpec(args.s0, args.B1)
    if args.nu is not None:
        nu = load_measure(args.nu)
    elif args.curve is not None:
        nu = measure_from_put_curve(load_curve(args.curve), tol)
    else:
        raise InputError("market price needs --nu or --curve")
    ks = np.asarray(args.k, dtype=float)
    return EXIT_OK, bio.table_csv(["k", "value"], zip(ks, np.atleast_1d(american_put_value(nu, m, ks))))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="biased-order", description="Biased convex order toolkit.")
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--tol", action="append", metavar="NAME=VALUE",
                   help="override a tolerance (mass, order, strict, mean, merge, lp, pivot, reassemble)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def group(name, help):
        g = sub.add_parser(name, help=help)
        return g.add_subparsers(dest="action", required=True, parser_class=_Parser)

    def leaf(parent, name, fn, help, *opts):
        s = parent.add_parser(name, help=help, description=help)
        for flags, kw in opts:
            s.add_argument(*flags, **kw)
        s.set_defaults(fn=fn)
        return s

    MU = (("--mu",), dict(required=True, help="initial law (measure JSON)"))
    NU = (("--nu",), dict(required=True, help="target law (measure JSON)"))
    BETA = (("--beta",), dict(type=float, required=True, help="bias level in (0, 1)"))
    X = (("--x",), dict(type=float, required=True, help="centre point"))
    MARGIN = (("--margin",), dict(type=float, default=1e-6, help="strong-order margin"))
    STRONG = (("--strong",), dict(action="store_true", help="use the strong (strict) variant"))
    SEED = (("--seed",), dict(type=int, default=0))
    N = (("--n",), dict(type=int, default=1000, help="number of samples or paths"))

    order = group("order", "order predicates")
    leaf(order, "check", cmd_order_check, "is there a beta-biased coupling of mu and nu", MU, NU, BETA)
    leaf(order, "max-bias", cmd_order_max_bias, "largest beta for which nu is biased around x", NU, X)
    leaf(order, "strong-check", cmd_order_strong_check, "strong order check at a margin", MU, NU, BETA, MARGIN)

    s = sub.add_parser("decompose", help="split a biased measure into simple components")
    for flags, kw in (NU, X, BETA, STRONG):
        s.add_argument(*flags, **kw)
    s.set_defaults(fn=cmd_decompose)
    s = sub.add_parser("couple", help="construct a biased coupling or a separating payoff")
    for flags, kw in (MU, NU, BETA):
        s.add_argument(*flags, **kw)
    s.set_defaults(fn=cmd_couple)
    s = sub.add_parser("glue", help="compose two couplings through the middle marginal")
    s.add_argument("--pi1", required=True)
    s.add_argument("--pi2", required=True)
    s.set_defaults(fn=cmd_glue)

    env = group("envelope", "beta-envelopes of piecewise-linear payoffs")
    G = (("--g",), dict(required=True, help="payoff (piecewise-linear JSON)"))
    leaf(env, "eval", cmd_envelope_eval, "envelope value at one point", G, BETA, X)
    leaf(env, "curve", cmd_envelope_curve, "envelope on a grid (CSV x,g,envelope)", G, BETA,
         (("--from",), dict(dest="lo", type=float, required=True)),
         (("--to",), dict(dest="hi", type=float, required=True)),
         (("--points",), dict(dest="n", type=int, default=201)))

    emb = group("embed", "Poisson embeddings")
    common = (MU, NU, BETA, STRONG, MARGIN)
    leaf(emb, "plan", cmd_embed_plan, "embedding plan with integrand schedules", *common)
    leaf(emb, "exact-law", cmd_embed_exact_law, "exact terminal law of the plan", *common)
    leaf(emb, "sample", cmd_embed_sample, "terminal samples (CSV path_id,x_T)", *common, N, SEED,
         (("--threads",), dict(type=int, default=1)))
    leaf(emb, "paths", cmd_embed_paths, "trajectories (CSV path_id,t,x)", *common, N, SEED,
         (("--grid",), dict(type=int, default=None, help="grid points on [0, t_beta] (default 200)")))

    mk = group("market", "American put curves")
    CURVE = (("--curve",), dict(required=True, help="put curve (potential curve JSON)"))
    S0 = (("--s0",), dict(type=float, required=True))
    B1 = (("--B1",), dict(type=float, required=True))
    leaf(mk, "recover", cmd_market_recover, "implied law from a put curve", CURVE)
    leaf(mk, "check", cmd_market_check, "no-arbitrage test of a put curve", CURVE, S0, B1)
    leaf(mk, "price", cmd_market_price, "American put values (CSV k,value)", S0, B1,
         (("--nu",), dict(default=None)), (("--curve",), dict(default=None)),
         (("--k",), dict(type=float, nargs="+", required=True)))
    return p


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        tol = _tolerances(args)
        code, text = args.fn(args, tol)
        _emit(text, args.out)
        return code
    except NegativeVerdict as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        sys.stdout.write(bio.dumps({"holds": False, "reason": msg}))
        return EXIT_NEGATIVE
    except (InputError, ValueError, OSError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)
