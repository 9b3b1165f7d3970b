"""The finite-time ruin constant ``B(T)`` and the quantities built on it.

``B(T) = int_0^T e^{psi(alpha)(T - t)} E e^{alpha Xbar_t} dt`` is computed by
three independent routes: Simpson quadrature over Monte Carlo estimates of
``m(t) = E e^{alpha Xbar_t}``, an exponential random time that turns the
integral into a single expectation, and numerical inversion of its Laplace
transform.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import laplace, rng
from .errors import ConfigError, DomainError, FallbackWarning, ResonanceWarning
from .model import (
    RiskModel,
    cumulant,
    cumulant_derivative,
    esscher_model,
    levy_tail,
    lundberg_root,
    mean_increment,
    phi_inverse_complex,
)
from .paths import MCEstimate, estimate_sup_mgf_curve, estimate_tail_prob, simulate_batch, sup_and_value, sup_and_value_at

__all__ = [
    "BEstimate",
    "GrowthEstimate",
    "b_quadrature",
    "b_exp_time",
    "b_laplace",
    "b_transform",
    "finite_time_ruin_estimate",
    "growth_rate",
    "segerdahl",
    "tail_ratio_diagnostic",
    "consistent",
    "sup_mgf_at_exp_time",
]

CRITICAL_TOL = 1e-8
RESONANCE_TOL = 1e-6


@dataclass(frozen=True)
class BEstimate:
    value: float
    std_error: float
    method: str
    T: float
    alpha: float
    replicas: int = 0
    seed: int | None = None
    flags: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class GrowthEstimate:
    t_grid: np.ndarray
    rates: np.ndarray
    std_errors: np.ndarray
    extrapolated: float
    psi: float


def _check_alpha(model: RiskModel, alpha: float) -> float:
    model.claims.check_domain(alpha)
    return cumulant(model, alpha)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        raise ConfigError(f"Simpson's rule needs an odd number of nodes >= 3, got {n}")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def b_quadrature(
    model: RiskModel,
    alpha: float,
    T: float,
    grid_size: int = 33,
    replicas: int = 10**5,
    seed: int = 0,
    sampler: str = "esscher",
    threads: int | None = None,
) -> BEstimate:
    """Composite Simpson rule for ``B(T)`` with ``m`` estimated on common paths.

    Every replica contributes its own Simpson sum over all nodes, so the
    standard error is that of an i.i.d. mean and already includes the
    covariance between nodes.  Under ``sampler='esscher'`` the integrand is
    ``e^{psi T} e^{alpha (Xbar_s - X_s)}`` under the tilted law.
    """
    psi = _check_alpha(model, alpha)
    if sampler not in ("esscher", "direct"):
        raise ConfigError(f"unknown sampler {sampler!r}")
    if not T > 0:
        raise ConfigError(f"horizon must be positive, got {T}")
    s = np.linspace(0.0, T, grid_size)  # path times T - t
    w = _simpson_weights(grid_size, T / (grid_size - 1))
    sim = esscher_model(model, alpha) if sampler == "esscher" else model
    if sampler == "esscher":
        node_w = w
        scale = math.exp(psi * T)
    else:
        node_w = w * np.exp(psi * (T - s))
        scale = 1.0

    def block(gen, b, n):
        batch = simulate_batch(sim, T, n, gen)
        sup, val = sup_and_value(batch, s)
        vals = np.exp(alpha * (sup - val)) if sampler == "esscher" else np.exp(alpha * sup)
        return rng.Moments.of(vals @ node_w)

    mom = rng.merge_all(rng.map_blocks(block, replicas, seed, rng.TAG_B_QUAD, threads))
    return BEstimate(scale * mom.mean, scale * mom.std_error, "quadrature", T, alpha, replicas, seed)


def b_exp_time(
    model: RiskModel,
    alpha: float,
    T: float,
    replicas: int = 10**5,
    seed: int = 0,
    sampler: str = "esscher",
    threads: int | None = None,
    grid_size: int = 33,
) -> BEstimate:
    """``B(T)`` as one expectation over an independent exponential time ``e``.

    For ``psi > 0``: ``psi^{-1} e^{psi T} E(e^{alpha Xbar_e}; e < T)`` with
    ``e ~ Exp(psi)``; for ``psi < 0``: ``-psi^{-1} E(e^{alpha Xbar_{T-e}}; e < T)``
    with ``e ~ Exp(-psi)``.  At ``|psi| < 1e-8`` the quadrature method is used
    instead and the result is flagged.
    """
    psi = _check_alpha(model, alpha)
    if sampler not in ("esscher", "direct"):
        raise ConfigError(f"unknown sampler {sampler!r}")
    if abs(psi) < CRITICAL_TOL:
        warnings.warn(
            f"psi(alpha) = {psi:.3g} is critical; exp-time method falls back to quadrature",
            FallbackWarning,
            stacklevel=2,
        )
        b = b_quadrature(model, alpha, T, grid_size, replicas, seed, sampler, threads)
        return BEstimate(b.value, b.std_error, "exp-time", T, alpha, replicas, seed, ("fallback=quadrature",))
    sim = esscher_model(model, alpha) if sampler == "esscher" else model
    rate = abs(psi)

    def block(gen, b, n):
        e = gen.exponential(1.0 / rate, size=n)
        inside = e < T
        if psi > 0:
            times = np.where(inside, e, 0.0)
        else:
            times = np.where(inside, T - e, 0.0)
        batch = simulate_batch(sim, times, n, gen)
        sup, val = sup_and_value_at(batch, times)
        if sampler == "esscher":
            m = np.exp(psi * times + alpha * (sup - val))
        else:
            m = np.exp(alpha * sup)
        return rng.Moments.of(np.where(inside, m, 0.0))

    mom = rng.merge_all(rng.map_blocks(block, replicas, seed, rng.TAG_B_EXP, threads))
    scale = math.exp(psi * T) / psi if psi > 0 else -1.0 / psi
    return BEstimate(scale * mom.mean, scale * mom.std_error, "exp-time", T, alpha, replicas, seed)


def b_transform(model: RiskModel, alpha: float, delta: complex) -> complex:
    """Laplace transform of ``T -> B(T)`` at ``delta``.

    ``(phi(delta) - alpha) / ((delta - psi)^2 phi(delta))`` for ``p > 0``;
    for ``p <= 0`` the sup equals the endpoint and the transform is
    ``1 / (delta - psi)^2``.
    """
    psi = cumulant(model, alpha)
    if model.premium <= 0:
        return 1.0 / (delta - psi) ** 2
    phi = phi_inverse_complex(model, delta)
    return (phi - alpha) / ((delta - psi) ** 2 * phi)


def b_laplace(model: RiskModel, alpha: float, T: float, terms: int = 20) -> BEstimate:
    """``B(T)`` by Euler-summation inversion of :func:`b_transform`.

    When ``psi(alpha) > 0`` the double pole at ``delta = psi`` would make the
    original grow exponentially; the contour is shifted by ``psi`` so that the
    inverted function is of polynomial growth.
    """
    psi = _check_alpha(model, alpha)
    if not T > 0:
        raise ConfigError(f"horizon must be positive, got {T}")
    shift = 0.0
    flags = ()
    if abs(laplace.contour_abscissa(T, terms) - psi) < RESONANCE_TOL:
        warnings.warn("Laplace contour is resonant with psi(alpha); shifting it", ResonanceWarning, stacklevel=2)
        shift = max(psi, 0.0) + 1.0
        flags = ("contour-shift",)
    elif psi > 0:
        shift = psi
        flags = ("contour-shift",)
    value = laplace.invert(lambda d: b_transform(model, alpha, d), T, terms, shift)
    return BEstimate(value, 0.0, "laplace", T, alpha, flags=flags)


def consistent(a: BEstimate, b: BEstimate, n_se: float = 3.0, rel: float = 0.005) -> bool:
    """Agreement at ``n_se`` combined standard errors, or ``rel`` when one side is deterministic."""
    gap = abs(a.value - b.value)
    se = math.hypot(a.std_error, b.std_error)
    if a.std_error == 0.0 or b.std_error == 0.0:
        return gap <= max(n_se * se, rel * max(abs(a.value), abs(b.value)))
    return gap <= n_se * se


def finite_time_ruin_estimate(model: RiskModel, alpha: float, u: float, b: BEstimate) -> float:
    """``Pi_bar(u) * B(T)``, the leading term of ``P(tau(u) < T)``."""
    if not u > 0:
        raise DomainError(f"level must be positive, got {u}")
    return float(levy_tail(model, u)) * b.value


def growth_rate(model, alpha, t_grid, replicas=10**5, seed=0, sampler="esscher", threads=None) -> GrowthEstimate:
    """``ln m(t) / t`` on a time grid, with an extrapolated exponential rate.

    The extrapolation is a weighted least-squares fit of ``ln m(t)`` on
    ``(t, 1, ln(1 + t))``; the coefficient of ``t`` is returned.
    """
    t = np.asarray(t_grid, dtype=float)
    psi = cumulant(model, alpha)
    est, se = estimate_sup_mgf_curve(model, alpha, t, replicas, seed, sampler, threads)
    log_m = np.log(est)
    rates = log_m / t
    rel = se / est
    rate_se = rel / t
    if t.size >= 3:
        design = np.column_stack([t, np.ones_like(t), np.log1p(t)])
        wts = 1.0 / np.maximum(rel, 1e-12)
        coef, *_ = np.linalg.lstsq(design * wts[:, None], log_m * wts, rcond=None)
        extrapolated = float(coef[0])
    else:
        extrapolated = float(rates[-1])
    return GrowthEstimate(t, rates, rate_se, extrapolated, psi)


def segerdahl(model: RiskModel, u: float, T: float) -> float | None:
    """Segerdahl's normal approximation ``C e^{-nu u} Phi((T - a u) / (b sqrt(u)))``.

    ``C = -E X_1 / psi'(nu)``, ``a = 1 / psi'(nu)`` and
    ``b^2 = psi''(nu) / psi'(nu)^3``; ``None`` without a Lundberg root.
    """
    nu = lundberg_root(model)
    if nu is None:
        return None
    d1 = cumulant_derivative(model, nu, 1)
    d2 = cumulant_derivative(model, nu, 2)
    if not (math.isfinite(d1) and math.isfinite(d2) and d1 > 0):
        return None
    c = -mean_increment(model) / d1
    a = 1.0 / d1
    b = math.sqrt(d2 / d1**3)
    if math.isinf(T):
        return c * math.exp(-nu * u)
    z = (T - a * u) / (b * math.sqrt(u))
    return c * math.exp(-nu * u) * 0.5 * float(special.erfc(-z / math.sqrt(2.0)))


def tail_ratio_diagnostic(model, alpha, T, u_grid, replicas=10**5, seed=0, importance=True, threads=None):
    """Rows ``(u, ratio, std_error, prediction)`` with ``ratio = P(X_T > u) / Pi_bar(u)``.

    The prediction ``T e^{psi(alpha) T}`` is the convolution-equivalent limit.
    """
    psi = cumulant(model, alpha)
    prediction = T * math.exp(psi * T)
    rows = []
    for u in u_grid:
        est: MCEstimate = estimate_tail_prob(
            model, u, T, replicas, seed, importance=alpha if importance else None, threads=threads
        )
        tail = float(levy_tail(model, u))
        rows.append((float(u), est.estimate / tail, est.std_error / tail, prediction))
    return rows


def sup_mgf_at_exp_time(model, alpha, delta, replicas=10**5, seed=0, threads=None) -> MCEstimate:
    """``E e^{alpha Xbar_e}`` for ``e ~ Exp(delta)`` independent of the path.

    Its product with ``1 / (delta (delta - psi))`` is the Laplace transform of
    ``B`` at ``delta``.  Paths run under the Esscher law, which needs
    ``delta > 2 psi`` for a finite variance.
    """
    psi = _check_alpha(model, alpha)
    if not delta > max(psi, 0.0):
        raise ConfigError(f"need delta > max(psi, 0) = {max(psi, 0.0):.3g}, got {delta}")
    sim = esscher_model(model, alpha)

    def block(gen, b, n):
        e = gen.exponential(1.0 / delta, size=n)
        batch = simulate_batch(sim, e, n, gen)
        sup, val = sup_and_value_at(batch, e)
        return rng.Moments.of(np.exp(psi * e + alpha * (sup - val)))

    mom = rng.merge_all(rng.map_blocks(block, replicas, seed, rng.TAG_MISC, threads))
    return MCEstimate(mom.mean, mom.std_error, replicas, seed, "sup-mgf/exp-time")
