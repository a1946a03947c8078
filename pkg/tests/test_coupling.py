import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biased_order.coupling import (
    DiscreteCoupling,
    check_strong_biased_coupling,
    construct_biased_coupling,
    glue,
    rows_biased,
    separating_payoff,
)
from biased_order.envelope import beta_envelope
from biased_order.errors import MarginalMismatchError, NotInBiasedOrderError, NotInStrongOrderError
from biased_order.io import coupling_from_dict, measure_from_dict
from biased_order.measure import DiscreteMeasure, make_measure
from conftest import load_fixture
from oracles import max_bias_oracle, random_feasible, random_step


WIDE = make_measure([(-2, 0.5), (2, 0.5)])


def test_dirac_to_symmetric(dirac0, sym):
    pi = construct_biased_coupling(dirac0, sym, 0.5)
    assert pi.w[0] == pytest.approx([0.5, 0.5])
    assert rows_biased(pi, 0.5).holds
    assert not rows_biased(pi, 0.6).holds
    with pytest.raises(NotInBiasedOrderError) as info:
        construct_biased_coupling(dirac0, sym, 0.6)
    assert info.value.program.lp.certifies_infeasible(info.value.certificate)


def test_symmetric_to_wide_threshold(sym):
    # the martingale coupling is unique here, so the threshold is the smaller row bias
    pi = construct_biased_coupling(sym, WIDE, 0.1)
    expected = min(max_bias_oracle(WIDE.xs, pi.w[i] / pi.w[i].sum(), x) for i, x in enumerate(sym.xs))
    assert expected == pytest.approx(0.25, abs=1e-9)
    assert rows_biased(construct_biased_coupling(sym, WIDE, 0.25 - 1e-6), 0.25 - 1e-6).holds
    with pytest.raises(NotInBiasedOrderError):
        construct_biased_coupling(sym, WIDE, 0.25 + 1e-6)


def test_strong_examples(dirac0, sym):
    pi = check_strong_biased_coupling(dirac0, sym, 0.4, margin=1e-4)
    assert rows_biased(pi, 0.4, strong=True).holds
    with pytest.raises(NotInStrongOrderError):
        check_strong_biased_coupling(dirac0, sym, 0.5)
    d = DiscreteMeasure.dirac(1.5)
    assert check_strong_biased_coupling(d, d, 0.99).w[0, 0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        check_strong_biased_coupling(dirac0, sym, 0.4, margin=0.0)


def test_glue_with_identity(sym):
    pi = construct_biased_coupling(sym, WIDE, 0.2)
    out = glue(pi, DiscreteCoupling.identity(WIDE))
    assert np.allclose(out.w, pi.w)
    out = glue(DiscreteCoupling.identity(sym), pi)
    assert np.allclose(out.w, pi.w)


def test_glue_mismatch(sym):
    pi = construct_biased_coupling(DiscreteMeasure.dirac(0.0), sym, 0.5)
    with pytest.raises(MarginalMismatchError):
        glue(pi, DiscreteCoupling.identity(WIDE))


def test_symmetric_two_step_glue():
    pi1 = construct_biased_coupling(DiscreteMeasure.dirac(0.0), make_measure([(-1, 0.5), (1, 0.5)]), 0.5)
    ys = np.array([-2.0, 0.0, 2.0])
    pi2 = DiscreteCoupling(np.array([-1.0, 1.0]), ys, np.array([[0.25, 0.25, 0.0], [0.0, 0.25, 0.25]]))
    out = glue(pi1, pi2)
    assert out.w[0] == pytest.approx([0.25, 0.5, 0.25])
    assert rows_biased(out, 0.25).holds
    construct_biased_coupling(DiscreteMeasure.dirac(0.0), out.col_marginal(), 0.25)


@pytest.mark.parametrize("chain", load_fixture("gluing_chains.json")["chains"], ids=lambda c: c["name"])
def test_fixture_chains(chain):
    b1, b2 = chain["beta1"], chain["beta2"]
    nu0, nu2 = measure_from_dict(chain["nu0"]), measure_from_dict(chain["nu2"])
    pi = glue(coupling_from_dict(chain["pi1"]), coupling_from_dict(chain["pi2"]))
    assert rows_biased(coupling_from_dict(chain["pi1"]), b1).holds
    assert rows_biased(coupling_from_dict(chain["pi2"]), b2).holds
    assert rows_biased(pi, b1 * b2).holds
    assert not rows_biased(pi, b1 * b2 + 0.05).holds
    with pytest.raises(NotInBiasedOrderError):
        construct_biased_coupling(nu0, nu2, b1 * b2 + 0.05)


def test_non_transitive_at_fixed_beta():
    chain = next(c for c in load_fixture("gluing_chains.json")["chains"] if c["beta1"] == c["beta2"])
    beta = chain["beta1"]
    nu0, nu1, nu2 = (measure_from_dict(chain[k]) for k in ("nu0", "nu1", "nu2"))
    construct_biased_coupling(nu0, nu1, beta)
    construct_biased_coupling(nu1, nu2, beta)
    with pytest.raises(NotInBiasedOrderError):
        construct_biased_coupling(nu0, nu2, beta)


@settings(max_examples=40)
@given(st.integers(0, 2**31))
def test_feasible_instances_give_biased_rows(seed):
    mu, nu, beta = random_feasible(np.random.default_rng(seed), max_mu=6, max_nu=10)
    pi = construct_biased_coupling(mu, nu, beta)
    assert rows_biased(pi, beta).holds
    assert pi.martingale_defect() <= 1e-8


@settings(max_examples=40)
@given(st.integers(0, 2**31))
def test_infeasible_instances_separate(seed):
    rng = np.random.default_rng(seed)
    mu, nu, beta = random_feasible(rng, max_mu=6, max_nu=10)
    beta = min(0.99, beta + float(rng.uniform(0.2, 0.6)))
    try:
        pi = construct_biased_coupling(mu, nu, beta)
    except NotInBiasedOrderError as err:
        g, sep = separating_payoff(mu, nu, beta, err)
        lhs = sum(m * beta_envelope(g, beta, x) for x, m in mu.atoms)
        assert lhs > nu.integrate(g) + 1e-10
        assert sep == pytest.approx(lhs - nu.integrate(g))
    else:
        assert rows_biased(pi, beta).holds


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.booleans())
def test_glued_chains_keep_product_bias(seed, strong_first):
    rng = np.random.default_rng(seed)
    b1, b2 = rng.uniform(0.1, 0.9, 2)
    mu = DiscreteMeasure(np.sort(rng.uniform(-2, 2, 3)), rng.dirichlet(np.ones(3)))
    ys1, w1 = random_step(rng, mu, b1)
    pi1 = DiscreteCoupling(mu.xs, ys1, w1)
    ys2, w2 = random_step(rng, pi1.col_marginal(), b2)
    pi2 = DiscreteCoupling(ys1, ys2, w2)
    assert rows_biased(pi1, b1).holds and rows_biased(pi2, b2).holds
    out = glue(pi1, pi2)
    assert rows_biased(out, b1 * b2).holds
    if strong_first and rows_biased(pi1, b1, strong=True).holds:
        assert rows_biased(out, b1 * b2, strong=True).holds
