import math

import numpy as np
import pytest

from levy_ruin.asymptotics import b_laplace
from levy_ruin.conditioned import (
    PassageGrid,
    build_passage_grid,
    conditional_mc_reference,
    sample_limit_triple,
    sample_limit_triples,
    sample_tau,
    sample_w0,
    tau_cdf,
)
from levy_ruin.errors import ConfigError, NoHitsError
from levy_ruin.model import Exponential, RiskModel, TiltedPareto, cumulant
from levy_ruin.stats import ks_distance, ks_two_sample

MODEL = RiskModel(1.0, 2.0, TiltedPareto(1.0, 2.0, 1.0))
T = 0.5


@pytest.fixture(scope="module")
def grid():
    return build_passage_grid(MODEL, 1.0, T, replicas=40_000, seed=1, n_times=21)


@pytest.fixture(scope="module")
def sample(grid):
    return sample_limit_triples(MODEL, 1.0, T, grid, 20_000, seed=2)


def test_tau_cdf_limits():
    assert tau_cdf(1.0, 0.0, 4.0) == pytest.approx(0.25)
    # density psi e^{psi t} / (e^{psi T} - 1)
    psi, t, T_ = -0.7, 1.3, 3.0
    assert tau_cdf(t, psi, T_) == pytest.approx(math.expm1(psi * t) / math.expm1(psi * T_), rel=1e-12)


def test_sample_tau_law():
    gen = np.random.default_rng(0)
    psi = cumulant(MODEL, 1.0)
    x = sample_tau(MODEL, 1.0, 2.0, gen, 50_000)
    assert ks_distance(x, lambda t: tau_cdf(t, psi, 2.0)) < 0.01


def test_grid_certificate_and_round_trip(grid, tmp_path):
    assert grid.certificate() < 1e-4
    path = tmp_path / "grid.npz"
    grid.save(path)
    back = PassageGrid.load(path)
    assert back.matches(MODEL, 1.0, T)
    assert not back.matches(MODEL.with_premium(2.5), 1.0, T)
    assert np.array_equal(back.prob, grid.prob) and back.header() == grid.header()


def test_grid_probabilities_are_monotone(grid):
    # harder to pass a higher level; easier with more time
    assert np.all(np.diff(grid.prob, axis=0) <= 1e-12)
    assert np.all(np.diff(grid.prob, axis=1) >= -1e-12)


def test_grid_sup_mgf_matches_laplace(grid):
    # B(T) = int_0^T e^{psi t} m(T - t) dt from the grid's m
    psi = cumulant(MODEL, 1.0)
    t = np.linspace(0, T, 401)
    m = np.array([grid.sup_mgf(T - s) for s in t])
    b = np.trapezoid(np.exp(psi * t) * m, t)
    assert b == pytest.approx(b_laplace(MODEL, 1.0, T).value, rel=0.01)


def test_w0_sampler_matches_grid_density(grid):
    gen = np.random.default_rng(4)
    w = sample_w0(grid, 1.0, T, gen, 40_000)
    # P(W0 > 0) = int_0^inf alpha e^{-alpha z} dz / m(T) = 1 / m(T)
    assert np.mean(w > 0) == pytest.approx(1.0 / grid.sup_mgf(T), abs=0.01)


def test_limit_triple_margins(sample):
    psi = cumulant(MODEL, 1.0)
    assert len(sample) == 20_000
    assert ks_distance(sample.killing_time, lambda t: tau_cdf(t, psi, T)) < 0.015
    times = np.linspace(T / 10, T, 10)
    b_top = b_laplace(MODEL, 1.0, T).value
    ratio = np.array([b_laplace(MODEL, 1.0, s).value for s in times]) / b_top
    pt = np.sort(sample.passage_time)
    emp = np.searchsorted(pt, times, side="right") / pt.size
    assert np.max(np.abs(emp - ratio)) < 0.02
    assert np.all(sample.overshoot >= 0) and np.all(sample.passage_time <= T + 1e-12)


def test_limit_overshoot_close_to_conditional_mc_at_high_level(sample):
    ref = conditional_mc_reference(MODEL, 1.0, 16.0, T, 200_000, 5)
    assert ks_two_sample(sample.overshoot, ref.overshoot, None, ref.weight) < 0.1


def test_triples_are_reproducible(grid):
    a = sample_limit_triples(MODEL, 1.0, T, grid, 500, seed=9, threads=1)
    b = sample_limit_triples(MODEL, 1.0, T, grid, 500, seed=9, threads=2)
    assert np.array_equal(a.overshoot, b.overshoot) and np.array_equal(a.tau, b.tau)
    one = sample_limit_triple(MODEL, 1.0, T, grid, np.random.default_rng(0))
    assert 0 <= one.tau <= T


def test_grid_mismatch_rejected(grid):
    with pytest.raises(ConfigError):
        sample_limit_triples(MODEL, 1.0, 2 * T, grid, 10, seed=0)


def test_reference_without_hits():
    m = RiskModel(1.0, 5.0, Exponential(5.0))
    with pytest.raises(NoHitsError):
        conditional_mc_reference(m, 1.0, 50.0, 0.5, 1_000, 0, importance=False)
