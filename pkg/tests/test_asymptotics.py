import math
import warnings

import numpy as np
import pytest

from levy_ruin.asymptotics import (
    b_exp_time,
    b_laplace,
    b_quadrature,
    b_transform,
    consistent,
    finite_time_ruin_estimate,
    growth_rate,
    segerdahl,
    sup_mgf_at_exp_time,
    tail_ratio_diagnostic,
)
from levy_ruin.errors import DomainError, FallbackWarning
from levy_ruin.fluctuation import infinite_horizon_constant
from levy_ruin.model import Exponential, RiskModel, TiltedPareto, cumulant
from levy_ruin.paths import estimate_sup_mgf

SUBORDINATOR = RiskModel(1.0, 0.0, TiltedPareto(1.0, 2.5, 1.0))


def test_subordinator_closed_form():
    # B(T) = T e^{psi T}; psi(1) = M(1) - 1 = 1/(theta - 1) = 2/3
    target = math.exp(2.0 / 3.0)
    assert b_laplace(SUBORDINATOR, 1.0, 1.0).value == pytest.approx(target, rel=1e-9)
    q = b_quadrature(SUBORDINATOR, 1.0, 1.0, replicas=1000)
    assert q.value == pytest.approx(target, rel=1e-9)


def test_exponential_transform_closed_form(exp_model):
    # phi(delta) for Exp(1), lam=1, p=2: root of 2b^2 + (delta - 1) b - delta = 0
    alpha, delta = 0.25, 2.0
    b_ = delta - 1.0
    phi = (-b_ - math.sqrt(b_ * b_ + 8 * delta)) / 4.0
    psi = cumulant(exp_model, alpha)
    expected = (phi - alpha) / ((delta - psi) ** 2 * phi)
    assert b_transform(exp_model, alpha, delta).real == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("T", [0.5, 2.0])
def test_three_methods_agree(tp_model, T):
    q = b_quadrature(tp_model, 1.0, T, replicas=100_000, seed=1)
    e = b_exp_time(tp_model, 1.0, T, replicas=200_000, seed=2)
    lp = b_laplace(tp_model, 1.0, T)
    assert consistent(q, lp) and consistent(e, lp) and consistent(q, e)


def test_exp_time_falls_back_when_critical(exp_model):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = b_exp_time(exp_model, 0.5, 1.0, replicas=20_000)
    assert any(issubclass(w.category, FallbackWarning) for w in caught)
    assert "fallback=quadrature" in est.flags


def test_saturation_towards_infinite_horizon(exp_model):
    limit = infinite_horizon_constant(exp_model, 0.25)
    assert b_laplace(exp_model, 0.25, 60.0).value == pytest.approx(limit, rel=1e-3)


def test_small_horizon():
    m = RiskModel(1.0, 2.0, TiltedPareto(1.0, 2.0, 1.0))
    assert b_laplace(m, 1.0, 0.01).value / 0.01 == pytest.approx(1.0, abs=0.02)


def test_growth_rate_recovers_cumulant():
    m = RiskModel(1.0, 0.9, Exponential(1.0))
    g = growth_rate(m, 0.5, np.array([2.0, 4.0, 8.0, 12.0]), replicas=50_000, seed=3)
    assert g.extrapolated == pytest.approx(g.psi, abs=0.03)


def test_doob_bound_on_sup_mgf_growth():
    # at psi = 0 the martingale e^{alpha X_t} keeps E e^{alpha Xbar_t} at most linear in t
    m = RiskModel(1.0, 2.0, Exponential(1.0))
    m8 = estimate_sup_mgf(m, 0.5, 8.0, 100_000, 1).estimate
    m16 = estimate_sup_mgf(m, 0.5, 16.0, 100_000, 1).estimate
    assert m16 / 17.0 <= 1.1 * m8 / 9.0


def test_segerdahl_constants(exp_model, tp_model):
    assert segerdahl(exp_model, 5.0, math.inf) == pytest.approx(0.5 * math.exp(-2.5), rel=1e-10)
    # Phi(0) = 1/2 at T = u / psi'(nu) = 5 / 2
    assert segerdahl(exp_model, 5.0, 2.5) == pytest.approx(0.25 * math.exp(-2.5), rel=1e-9)
    assert segerdahl(tp_model, 5.0, 2.0) is None


def test_finite_time_ruin_estimate_requires_positive_level(tp_model):
    b = b_laplace(tp_model, 1.0, 1.0)
    assert finite_time_ruin_estimate(tp_model, 1.0, 3.0, b) == pytest.approx(
        4.0**-2 * math.exp(-3.0) * b.value
    )
    with pytest.raises(DomainError):
        finite_time_ruin_estimate(tp_model, 1.0, 0.0, b)


def test_tail_ratio_prediction(tp_model):
    rows = tail_ratio_diagnostic(tp_model, 1.0, 2.0, [16.0], 200_000, 1)
    u, ratio, se, pred = rows[0]
    assert pred == pytest.approx(2.0 * math.exp(-2.0))
    assert abs(ratio - pred) / pred < 0.15


def test_sup_mgf_at_exponential_time(exp_model):
    # at an Exp(delta) time the Wiener-Hopf factor gives E e^{alpha Xbar_e} in closed form
    alpha, delta = 0.25, 1.0
    b_ = delta - 1.0
    phi = (-b_ - math.sqrt(b_ * b_ + 8 * delta)) / 4.0
    psi = cumulant(exp_model, alpha)
    expected = delta * (phi - alpha) / ((delta - psi) * phi)
    est = sup_mgf_at_exp_time(exp_model, alpha, delta, replicas=200_000, seed=4)
    assert abs(est.estimate - expected) < 4 * est.std_error
