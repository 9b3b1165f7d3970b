"""Kolmogorov–Smirnov distances for weighted samples."""

from __future__ import annotations

from typing import Callable

import numpy as np


def _normalise(x, w):
    x = np.asarray(x, dtype=float)
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float)
    keep = w > 0
    x, w = x[keep], w[keep]
    if x.size == 0:
        raise ValueError("empty sample")
    order = np.argsort(x, kind="stable")
    return x[order], w[order] / w.sum()


def ks_distance(x, cdf: Callable[[np.ndarray], np.ndarray], weights=None) -> float:
    """``sup |F_n - F|`` for a (weighted) empirical law against a continuous CDF."""
    xs, ws = _normalise(x, weights)
    upper = np.cumsum(ws)
    lower = upper - ws
    f = np.asarray(cdf(xs), dtype=float)
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(lower - f))))


def ks_two_sample(x, y, wx=None, wy=None) -> float:
    """``sup |F_x - F_y|`` for two (weighted) empirical laws."""
    xs, wxs = _normalise(x, wx)
    ys, wys = _normalise(y, wy)
    grid = np.union1d(xs, ys)
    fx = np.concatenate(([0.0], np.cumsum(wxs)))[np.searchsorted(xs, grid, side="right")]
    fy = np.concatenate(([0.0], np.cumsum(wys)))[np.searchsorted(ys, grid, side="right")]
    return float(np.max(np.abs(fx - fy)))


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    return float(s * s / (w * w).sum()) if s > 0 else 0.0
