"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import math
import time
import timeit
from contextlib import contextmanager

import numpy as np
import pytest

from biased_order.coupling import (
    DiscreteCoupling,
    construct_biased_coupling,
    glue,
    rows_biased,
    separating_payoff,
)
from biased_order.decomposition import decompose_atomic, decompose_biased
from biased_order.envelope import PiecewiseLinear, beta_envelope, convex_hull
from biased_order.errors import NotInBiasedOrderError
from biased_order.io import coupling_from_dict, measure_from_dict
from biased_order.market import MarketSpec, check_american_consistency, measure_from_put_curve
from biased_order.measure import DiscreteMeasure, make_measure, potential_curve, w1
from biased_order.order import is_beta_biased, is_strongly_beta_biased, max_bias
from biased_order.poisson import exact_terminal_law, integrand_for_simple, marginal_law, plan_embedding, sample
from conftest import ACCEPTANCE, load_fixture
from oracles import (
    cdf_distance,
    empirical,
    envelope_oracle,
    random_biased,
    random_feasible,
    random_piecewise,
    random_step,
)

SYM = make_measure([(-1, 0.5), (1, 0.5)])
TWO_PIECE = make_measure([(2, 0.5), (-1, 0.25), (-3, 0.25)])


@contextmanager
def criterion(n: int, title: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE.append(f"criterion {n}: FAIL {title} ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})")
        print(ACCEPTANCE[-1])
        raise
    ACCEPTANCE.append(f"criterion {n}: PASS {title} ({time.perf_counter() - start:.2f} s)")
    print(ACCEPTANCE[-1])


def fixture_plans():
    out = []
    for entry in load_fixture("embedding_plans.json")["plans"]:
        mu, nu = measure_from_dict(entry["mu"]), measure_from_dict(entry["nu"])
        out.append((entry["name"], plan_embedding(mu, nu, entry["beta"]), nu))
    return out


def test_criterion_01_closed_form_integrands():
    with criterion(1, "closed-form integrands"):
        s = integrand_for_simple(decompose_atomic(SYM, 0.0, 0.5).components[0], 0.0, 0.5)
        assert s.n_pieces == 1 and abs(s.coefs[0] - 1.0) <= 1e-12
        assert abs(s.cutoff - math.log(2)) <= 1e-12
        t = np.linspace(0, math.log(2), 50)
        assert np.max(np.abs(s.H(t) - np.exp(t))) <= 1e-12
        comp = decompose_atomic(TWO_PIECE, 0.0, 0.5).components[0]
        s = integrand_for_simple(comp, 0.0, 0.5)
        assert np.max(np.abs(s.coefs - [3.0, 1.5])) <= 1e-12
        assert abs(s.breaks[1] - math.log(4 / 3)) <= 1e-12
        assert abs(s.integral(s.cutoff) - 2.0) <= 1e-12
        per_call = min(timeit.repeat(lambda: integrand_for_simple(comp, 0.0, 0.5), number=100, repeat=5)) / 100
        assert per_call < 1e-3, per_call


def test_criterion_02_exact_embedding_law():
    with criterion(2, "exact embedding law on 500 random instances"):
        start = time.perf_counter()
        rng = np.random.default_rng(20240502)
        worst = 0.0
        for _ in range(500):
            mu, nu, beta = random_feasible(rng, max_mu=8, max_nu=16)
            worst = max(worst, w1(exact_terminal_law(plan_embedding(mu, nu, beta)), nu))
        assert worst <= 1e-9, worst
        assert time.perf_counter() - start < 60


def test_criterion_03_monte_carlo_consistency():
    with criterion(3, "Monte Carlo vs exact law on 5 fixture plans"):
        start = time.perf_counter()
        n = 100_000
        plans = fixture_plans()
        assert len(plans) == 5
        for seed, (name, plan, _) in enumerate(plans):
            d = cdf_distance(empirical(sample(plan, n, seed=seed)), exact_terminal_law(plan))
            assert d <= 1.63 / math.sqrt(n), (name, d)
        assert time.perf_counter() - start < 10


def random_pair(rng, kind: int):
    """Feasible pair, the same pair at a raised beta, or a jittered target."""
    mu, nu, beta = random_feasible(rng, max_mu=6, max_nu=10)
    if kind == 1:
        beta = min(0.99, beta + float(rng.uniform(0.1, 0.6)))
    elif kind == 2:
        xs = nu.xs + rng.normal(0, 0.3, nu.size)
        nu = DiscreteMeasure(xs, nu.ms)
        nu = nu.shifted(mu.first_moment() - nu.first_moment())
    return mu, nu, beta


def test_criterion_04_biased_strassen():
    with criterion(4, "coupling feasibility vs row checks and separating payoffs on 300 pairs"):
        start = time.perf_counter()
        rng = np.random.default_rng(7)
        feasible = infeasible = 0
        for k in range(300):
            mu, nu, beta = random_pair(rng, k % 3)
            try:
                pi = construct_biased_coupling(mu, nu, beta)
            except NotInBiasedOrderError as err:
                infeasible += 1
                g, _ = separating_payoff(mu, nu, beta, err)
                lhs = sum(m * beta_envelope(g, beta, float(x)) for x, m in mu.atoms)
                assert lhs > nu.integrate(g) + 1e-10
            else:
                feasible += 1
                assert rows_biased(pi, beta).holds
                assert pi.martingale_defect() <= 1e-8
        assert feasible >= 100 and infeasible >= 50, (feasible, infeasible)
        assert time.perf_counter() - start < 120


def test_criterion_05_decomposition_round_trip():
    with criterion(5, "decomposition round-trip on 500 inputs"):
        start = time.perf_counter()
        rng = np.random.default_rng(5)
        for k in range(500):
            beta = float(rng.uniform(0.05, 0.95))
            x = float(rng.uniform(-2, 2))
            xs, ms = random_biased(rng, x, beta, max_comp=3)
            nu = DiscreteMeasure(np.array(xs), np.array(ms))
            atomic = (k % 2 == 0) and not nu.is_dirac() and nu.ms[-1] >= beta
            d = decompose_atomic(nu, x, beta) if atomic else decompose_biased(nu, x, beta)
            assert w1(d.reassemble(), nu) <= 1e-9
            assert min(c.gamma for c in d.components) >= beta - 1e-9
        assert time.perf_counter() - start < 30


def test_criterion_06_gluing():
    with criterion(6, "gluing on 200 random chains plus sharpness and non-transitivity fixtures"):
        start = time.perf_counter()
        rng = np.random.default_rng(6)
        for _ in range(200):
            b1, b2 = rng.uniform(0.05, 0.95, 2)
            mu = DiscreteMeasure(np.sort(rng.uniform(-2, 2, 3)), rng.dirichlet(np.ones(3)))
            ys1, w_1 = random_step(rng, mu, b1)
            pi1 = DiscreteCoupling(mu.xs, ys1, w_1)
            ys2, w_2 = random_step(rng, pi1.col_marginal(), b2)
            pi2 = DiscreteCoupling(ys1, ys2, w_2)
            assert rows_biased(glue(pi1, pi2), b1 * b2).holds
        chains = load_fixture("gluing_chains.json")["chains"]
        for chain in chains:
            pi = glue(coupling_from_dict(chain["pi1"]), coupling_from_dict(chain["pi2"]))
            b = chain["beta1"] * chain["beta2"]
            assert rows_biased(pi, b).holds
            with pytest.raises(NotInBiasedOrderError):
                construct_biased_coupling(measure_from_dict(chain["nu0"]), measure_from_dict(chain["nu2"]), b + 0.05)
        same = next(c for c in chains if c["beta1"] == c["beta2"])
        beta = same["beta1"]
        nu0, nu1, nu2 = (measure_from_dict(same[k]) for k in ("nu0", "nu1", "nu2"))
        construct_biased_coupling(nu0, nu1, beta)
        construct_biased_coupling(nu1, nu2, beta)
        with pytest.raises(NotInBiasedOrderError):
            construct_biased_coupling(nu0, nu2, beta)
        assert time.perf_counter() - start < 60


def test_criterion_07_symmetry_boundary():
    with criterion(7, "symmetric two-point law at the one-half boundary"):
        assert is_beta_biased(SYM, 0.0, 0.5).holds
        assert not is_beta_biased(SYM, 0.0, 0.5 + 1e-6).holds
        assert abs(max_bias(SYM, 0.0) - 0.5) <= 1e-9
        assert not is_strongly_beta_biased(SYM, 0.0, 0.5).holds


def test_criterion_08_envelope():
    with criterion(8, "envelope vs grid oracle, monotonicity, hull limit, convex payoffs"):
        start = time.perf_counter()
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(200):
            g = random_piecewise(rng)
            beta, x = float(rng.uniform(0.05, 0.95)), float(rng.uniform(-2, 2))
            env = beta_envelope(g, beta, x)
            worst = max(worst, abs(env - envelope_oracle(g, beta, x)))
            vals = [beta_envelope(g, b, x) for b in np.linspace(0.05, 0.95, 10)]
            assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
            assert abs(beta_envelope(g, 1e-6, x) - convex_hull(g)(x)) <= 1e-4
            h = convex_hull(g)
            assert beta_envelope(h, beta, x) == h(x)
        assert worst <= 1e-6, worst
        assert time.perf_counter() - start < 120


def test_criterion_09_peacock_marginals():
    with criterion(9, "exact plan marginals are biased in time on 3 fixture plans"):
        start = time.perf_counter()
        for name, plan, _ in fixture_plans()[:3]:
            grid = [0.0, 0.2, 0.4, plan.beta.t_beta]
            laws = [marginal_law(plan, t) for t in grid]
            for i in range(len(grid)):
                for j in range(i + 1, len(grid)):
                    b = math.exp(-(grid[j] - grid[i]))
                    construct_biased_coupling(laws[i], laws[j], b)
        assert time.perf_counter() - start < 30


def test_criterion_10_market():
    with criterion(10, "put-curve round trip and no-arbitrage verdicts"):
        rng = np.random.default_rng(10)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            nu = DiscreteMeasure(np.sort(rng.uniform(0, 5, n)), rng.dirichlet(np.ones(n)))
            p = potential_curve(nu)
            back = measure_from_put_curve(p)
            assert np.max(np.abs(back.xs - nu.xs)) <= 1e-12
            assert np.max(np.abs(back.ms - nu.ms)) <= 1e-12
            assert np.max(np.abs(potential_curve(back).values - p.values)) <= 1e-12
        fx = load_fixture("market.json")
        m = MarketSpec(fx["s0"], fx["B1"])
        assert m.B1 == 2.0
        assert not check_american_consistency(potential_curve(measure_from_dict(fx["symmetric"]["nu"])), m).holds
        nu = measure_from_dict(fx["consistent"]["nu"])
        rep = check_american_consistency(potential_curve(nu), m)
        assert rep.holds and rep.k_tilde == nu.smax == fx["consistent"]["k_tilde"]
