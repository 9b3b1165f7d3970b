import math

import numpy as np
import pytest

from levy_ruin.laplace import invert
from levy_ruin.stats import effective_sample_size, ks_distance, ks_two_sample


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_inversion_of_known_pairs(t):
    assert invert(lambda s: 1 / (s + 1), t) == pytest.approx(math.exp(-t), rel=1e-8)
    assert invert(lambda s: 1 / (s * s + 1), t) == pytest.approx(math.sin(t), abs=1e-7)


def test_shifted_contour_for_growing_original():
    # t e^{t/2} has a double pole at 1/2
    f = lambda s: 1 / (s - 0.5) ** 2
    assert invert(f, 8.0, shift=0.5) == pytest.approx(8.0 * math.exp(4.0), rel=1e-8)


def test_ks_distance_exact_small_case():
    # empirical cdf of {0.5} vs uniform: sup gap 0.5
    assert ks_distance(np.array([0.5]), lambda x: np.clip(x, 0, 1)) == pytest.approx(0.5)


def test_weighted_ks_equals_replicated_sample():
    x = np.array([0.1, 0.4, 0.7])
    w = np.array([1.0, 2.0, 1.0])
    rep = np.array([0.1, 0.4, 0.4, 0.7])
    cdf = lambda v: np.clip(v, 0, 1)
    assert ks_distance(x, cdf, w) == pytest.approx(ks_distance(rep, cdf))
    y = np.array([0.2, 0.3])
    assert ks_two_sample(x, y, w) == pytest.approx(ks_two_sample(rep, y))


def test_effective_sample_size():
    assert effective_sample_size(np.ones(10)) == pytest.approx(10.0)
    assert effective_sample_size(np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0)
