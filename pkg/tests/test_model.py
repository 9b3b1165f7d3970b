import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from levy_ruin.errors import DomainError
from levy_ruin.model import (
    EsscherTiltedPareto,
    Exponential,
    Regime,
    RiskModel,
    TiltedPareto,
    cumulant,
    cumulant_derivative,
    cumulant_info,
    esscher_model,
    levy_tail,
    lundberg_root,
    mean_increment,
    phi_inverse,
    premium_for_cumulant,
)


def mp_tp_mgf(alpha, theta, scale, beta):
    # 1 + beta * int_0^inf e^{beta x} Fbar(x) dx
    f = lambda x: mp.e ** ((beta - alpha) * x) * (1 + x / scale) ** (-theta)
    return 1 + beta * mp.quad(f, [0, 10 * scale, mp.inf])


@pytest.mark.parametrize("theta", [2.0, 2.5, 3.0])
@pytest.mark.parametrize("beta", [-1.5, 0.3, 0.9, 1.0])
def test_tilted_pareto_mgf_matches_high_precision(theta, beta):
    d = TiltedPareto(1.0, theta, 1.0)
    ref = float(mp_tp_mgf(1.0, theta, 1.0, beta))
    assert d.mgf(beta) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("theta", [2.0, 3.5])
def test_mgf_at_index_closed_form(theta):
    d = TiltedPareto(1.0, theta, 2.0)
    assert d.mgf(1.0) == pytest.approx(1.0 + 2.0 / (theta - 1.0), rel=1e-12)


def test_exponential_cumulant_closed_form(exp_model):
    for b in (-2.0, 0.1, 0.5, 0.9):
        assert cumulant(exp_model, b) == pytest.approx(b / (1.0 - b) - 2.0 * b, abs=1e-14)


def test_mgf_domain_enforced():
    with pytest.raises(DomainError):
        Exponential(1.0).mgf(1.0)
    with pytest.raises(DomainError):
        TiltedPareto(1.0, 2.0, 1.0).mgf(1.0 + 1e-9)


def test_regime_and_lundberg_root(exp_model, tp_model):
    info = cumulant_info(exp_model, 0.5)
    assert info.regime is Regime.CRITICAL
    assert info.lundberg_root == pytest.approx(0.5, abs=1e-11)
    assert cumulant_info(exp_model, 0.25).regime is Regime.SUBCRITICAL
    assert cumulant_info(exp_model, 0.75).regime is Regime.SUPERCRITICAL
    # psi(1) = 1*(2 - 1) - 2 < 0 at the abscissa: no root
    assert lundberg_root(tp_model) is None


def test_lundberg_root_when_it_exists_for_tilted_pareto():
    m = RiskModel(1.0, 0.8, TiltedPareto(1.0, 2.0, 1.0))
    nu = lundberg_root(m)
    assert nu is not None and 0 < nu < 1
    assert abs(cumulant(m, nu)) < 1e-10


def test_derivatives_against_finite_differences(tp_model):
    h = 1e-5
    for b in (0.2, 0.6):
        fd1 = (cumulant(tp_model, b + h) - cumulant(tp_model, b - h)) / (2 * h)
        fd2 = (cumulant(tp_model, b + h) - 2 * cumulant(tp_model, b) + cumulant(tp_model, b - h)) / h**2
        assert cumulant_derivative(tp_model, b, 1) == pytest.approx(fd1, rel=1e-7)
        assert cumulant_derivative(tp_model, b, 2) == pytest.approx(fd2, rel=1e-4)


def test_phi_inverse_exponential_quadratic(exp_model):
    # p b^2 + (lam - p eta + d) b - d eta = 0, negative root
    for d in (0.1, 1.0, 5.0):
        a, b_, c = 2.0, 1.0 - 2.0 + d, -d
        root = (-b_ - math.sqrt(b_ * b_ - 4 * a * c)) / (2 * a)
        assert phi_inverse(exp_model, d) == pytest.approx(root, rel=1e-10)


def test_premium_for_cumulant(tp_model):
    p = premium_for_cumulant(tp_model, 1.0, -0.25)
    assert cumulant(tp_model.with_premium(p), 1.0) == pytest.approx(-0.25, abs=1e-12)


def test_esscher_model_moves_mean_to_derivative(tp_model):
    q = esscher_model(tp_model, 0.7)
    assert mean_increment(q) == pytest.approx(cumulant_derivative(tp_model, 0.7, 1), rel=1e-9)


def test_tail_and_levy_tail(tp_model):
    assert levy_tail(tp_model, 3.0) == pytest.approx(4.0**-2 * math.exp(-3.0), rel=1e-14)


def test_sampler_matches_min_of_exponential_and_lomax():
    d = TiltedPareto(1.0, 2.0, 1.0)
    gen = np.random.default_rng(7)
    x = d.sample(gen, 200_000)
    assert stats.kstest(x, lambda v: 1.0 - d.tail(v)).pvalue > 1e-3
    # the tail is a product of survival functions: min of independent Exp(1) and Lomax(2, 1)
    y = np.minimum(gen.exponential(1.0, 200_000), stats.lomax.rvs(2.0, size=200_000, random_state=gen))
    assert stats.ks_2samp(x, y).pvalue > 1e-3


def test_rejection_acceptance_rate():
    d = TiltedPareto(1.0, 2.0, 1.0)
    _, proposals = d.sample_with_stats(np.random.default_rng(3), 100_000)
    # acceptance is alpha / (alpha + theta / scale) = 1/3
    assert 100_000 / proposals == pytest.approx(1.0 / 3.0, rel=0.02)


def test_esscher_tilted_claims_sampler():
    base = TiltedPareto(1.0, 2.5, 1.0)
    tilted = EsscherTiltedPareto(base, 1.0)
    x = tilted.sample(np.random.default_rng(11), 100_000)
    m = base.mgf(1.0)

    def cdf(v):
        # P(Y > v) = (e^{v} Fbar(v) + int_v^inf e^{y} Fbar(y) dy) / M(1)
        v = np.asarray(v, dtype=float)
        upper = (1.0 + v) ** -2.5 + base.tilted_tail_integral(v, 1.0)
        return 1.0 - upper / m

    assert stats.kstest(x, cdf).pvalue > 1e-3


@pytest.mark.parametrize("beta", [0.0, 0.4, 1.0])
def test_tilted_integrated_tail_sampler(beta):
    d = TiltedPareto(1.0, 3.0, 1.0)
    x = d.sample_tilted_integrated_tail(np.random.default_rng(5), 100_000, beta)
    norm = d.tilted_tail_integral(0.0, beta)
    cdf = lambda v: 1.0 - d.tilted_tail_integral(v, beta) / norm
    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_tilted_tail_integral_matches_mpmath():
    d = TiltedPareto(1.0, 2.5, 1.0)
    for x, beta in ((0.0, 0.5), (3.0, 1.0), (10.0, -0.5)):
        ref = mp.quad(lambda y: mp.e ** (beta * y) * (1 + y) ** -2.5 * mp.e ** (-y), [x, x + 10, mp.inf])
        assert float(d.tilted_tail_integral(x, beta)) == pytest.approx(float(ref), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.2, 3.0),
    st.floats(2.05, 6.0),
    st.floats(0.2, 3.0),
    st.floats(0.0, 3.0),
    st.floats(-2.0, 0.999),
    st.floats(-2.0, 0.999),
    st.floats(0.0, 1.0),
)
def test_cumulant_is_convex(lam, theta, scale, premium, b1, b2, w):
    m = RiskModel(lam, premium, TiltedPareto(1.0, theta, scale))
    mid = w * b1 + (1 - w) * b2
    lhs = cumulant(m, mid)
    rhs = w * cumulant(m, b1) + (1 - w) * cumulant(m, b2)
    assert lhs <= rhs + 1e-9 * (1 + abs(rhs))
