import math

import numpy as np
import pytest

from levy_ruin.errors import ConfigError
from levy_ruin.model import Exponential, RiskModel, TiltedPareto, cumulant
from levy_ruin.paths import (
    PathBatch,
    PathSample,
    estimate_ruin_prob,
    estimate_sup_mgf,
    estimate_tail_prob,
    first_passage,
    passage_of_batch,
    ruin_sample,
    running_sup,
    simulate_batch,
    sup_and_value,
)


def hand_path():
    # X after the jumps: 2 - 0.5 = 1.5, 3.5 - 1.5 = 2.0, 7.5 - 3 = 4.5
    return PathSample(4.0, np.array([0.5, 1.5, 3.0]), np.array([2.0, 1.5, 4.0]), 1.0)


def test_hand_path_supremum():
    p = hand_path()
    assert running_sup(p, 0.4) == 0.0
    assert running_sup(p, 1.0) == 1.5
    assert running_sup(p, 2.5) == 2.0
    assert running_sup(p, 4.0) == 4.5
    assert p.value(4.0) == 3.5


def test_hand_path_passage():
    p = hand_path()
    ev = first_passage(p, 1.0)
    assert (ev.tau, ev.overshoot, ev.mode) == (0.5, 0.5, "jump")
    assert ev.prejump == -0.5
    ev = first_passage(p, 2.0)
    assert (ev.tau, ev.overshoot, ev.presup) == (3.0, 2.5, 2.0)
    assert first_passage(p, 5.0).tau is None


def test_upward_drift_crosses_continuously():
    p = PathSample(3.0, np.empty(0), np.empty(0), -1.0)
    ev = first_passage(p, 2.0)
    assert ev.tau == pytest.approx(2.0)
    assert ev.overshoot == pytest.approx(0.0, abs=1e-12)
    assert ev.mode == "drift"


def test_batch_agrees_with_single_paths(tp_model):
    gen = np.random.default_rng(1)
    batch = simulate_batch(tp_model, 3.0, 50, gen)
    sup, _ = sup_and_value(batch, np.array([3.0]))
    tau, *_ = passage_of_batch(batch, np.full(batch.n, 1.0))
    for i in range(batch.n):
        path = batch.path(i)
        assert sup[i, 0] == running_sup(path, 3.0)
        ev = first_passage(path, 1.0)
        if ev.tau is None:
            assert not tau[i] <= 3.0
        else:
            assert tau[i] == ev.tau


def test_round_trip_from_paths():
    b = PathBatch.from_paths([hand_path(), hand_path()])
    assert b.n == 2 and np.array_equal(b.path(1).sizes, hand_path().sizes)


def test_subordinator_esscher_estimator_is_exact():
    m = RiskModel(1.0, 0.0, TiltedPareto(1.0, 2.5, 1.0))
    est = estimate_sup_mgf(m, 1.0, 1.0, 10_000, 0)
    assert est.estimate == pytest.approx(math.exp(cumulant(m, 1.0)), rel=1e-12)
    assert est.std_error == pytest.approx(0.0, abs=1e-12)


def test_esscher_and_direct_sup_mgf_agree(exp_model):
    a = estimate_sup_mgf(exp_model, 0.25, 2.0, 200_000, 3, sampler="esscher")
    b = estimate_sup_mgf(exp_model, 0.25, 2.0, 200_000, 4, sampler="direct")
    assert abs(a.estimate - b.estimate) < 4 * math.hypot(a.std_error, b.std_error)


def test_infinite_horizon_ruin_exponential_closed_form(exp_model):
    target = 0.5 * math.exp(-2.5)
    est = estimate_ruin_prob(exp_model, 5.0, math.inf, 100_000, 2, importance=0.5)
    assert abs(est.estimate - target) < 4 * est.std_error
    # Esscher at the Lundberg root: the estimator is C e^{-nu (u + O)} with tiny spread
    assert est.std_error / est.estimate < 0.01


def test_direct_and_importance_tail_probability(tp_model):
    a = estimate_tail_prob(tp_model, 2.0, 2.0, 200_000, 5)
    b = estimate_tail_prob(tp_model, 2.0, 2.0, 200_000, 6, importance=1.0)
    assert abs(a.estimate - b.estimate) < 4 * math.hypot(a.std_error, b.std_error)


def test_direct_and_importance_ruin_probability(tp_model):
    a = estimate_ruin_prob(tp_model, 2.0, 2.0, 200_000, 5)
    b = estimate_ruin_prob(tp_model, 2.0, 2.0, 200_000, 6, importance=1.0)
    assert abs(a.estimate - b.estimate) < 4 * math.hypot(a.std_error, b.std_error)


def test_importance_at_infinite_horizon_needs_upward_tilted_drift(tp_light_model):
    with pytest.raises(ConfigError):
        ruin_sample(tp_light_model, 2.0, math.inf, 100, 0, importance=1.0)


def test_reproducible_and_thread_independent(tp_model):
    a = estimate_ruin_prob(tp_model, 4.0, 2.0, 40_000, 9, importance=1.0, threads=1)
    b = estimate_ruin_prob(tp_model, 4.0, 2.0, 40_000, 9, importance=1.0, threads=3)
    c = estimate_ruin_prob(tp_model, 4.0, 2.0, 40_000, 10, importance=1.0, threads=1)
    assert a == b
    assert a.estimate != c.estimate


def test_no_hits_flag():
    m = RiskModel(1.0, 5.0, Exponential(5.0))
    est = estimate_ruin_prob(m, 50.0, 0.5, 1_000, 0)
    assert est.no_hits and est.estimate == 0.0
