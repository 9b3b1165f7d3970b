"""Numerical Laplace inversion by Euler summation (Abate–Whitt).

With ``M`` terms of binomial averaging the inversion uses ``2M + 1`` transform
evaluations on the vertical line ``Re s = M ln(10) / (3 t)``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np


@lru_cache(maxsize=None)
def euler_nodes(m: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``beta_k`` and weights ``eta_k`` for ``k = 0 .. 2m``."""
    beta = m * math.log(10.0) / 3.0 + 1j * math.pi * np.arange(2 * m + 1)
    xi = np.zeros(2 * m + 1)
    xi[0] = 0.5
    xi[1 : m + 1] = 1.0
    xi[2 * m] = 2.0 ** (-m)
    for k in range(1, m):
        xi[2 * m - k] = xi[2 * m - k + 1] + 2.0 ** (-m) * math.comb(m, k)
    eta = 10.0 ** (m / 3.0) * (-1.0) ** np.arange(2 * m + 1) * xi
    return beta, eta


def contour_abscissa(t: float, m: int = 20) -> float:
    return m * math.log(10.0) / (3.0 * t)


def invert(transform: Callable[[complex], complex], t: float, m: int = 20, shift: float = 0.0) -> float:
    """``f(t)`` from its Laplace transform.

    With ``shift = c`` the routine inverts ``s -> F(s + c)``, whose original is
    ``e^{-c t} f(t)``, and multiplies back by ``e^{c t}``.  This moves the
    contour to the right of singularities at ``Re s <= c``.
    """
    if not t > 0:
        raise ValueError(f"inversion needs t > 0, got {t}")
    beta, eta = euler_nodes(m)
    total = 0.0
    for b, e in zip(beta, eta):
        total += e * complex(transform(b / t + shift)).real
    return math.exp(shift * t) * total / t
