"""Ladder quantities of the Cramér–Lundberg model and limiting overshoot laws.

The ascending ladder height process of ``X`` is identified explicitly: a
ladder step succeeds with probability ``rho = lam mu / p`` and its height has
the integrated-tail law ``G``.  Only normalisation-free ratios are exposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from . import rng
from .errors import RegimeError
from .model import Exponential, Regime, RiskModel, cumulant, cumulant_derivative, mean_increment
from .paths import MCEstimate

__all__ = [
    "LadderData",
    "OvershootLaw",
    "RegimeInfinity",
    "ladder_data",
    "sup_mgf_infinity",
    "infinite_horizon_constant",
    "ruin_prob_infinite",
    "overshoot_law_infinite",
    "overshoot_law_cramer",
    "overshoot_law_subordinator",
    "vigon_check",
]

CRAMER_TOL = 1e-10


class RegimeInfinity(float):
    """``+inf`` carrying the cumulant regime that made a limit diverge."""

    regime: Regime

    def __new__(cls, regime: Regime):
        obj = super().__new__(cls, math.inf)
        obj.regime = regime
        return obj

    def __repr__(self):
        return f"RegimeInfinity({self.regime.value})"


@dataclass(frozen=True)
class LadderData:
    """Ascending ladder summary; ``ladder_mass`` is the total mass of ``Pi_H / q``."""

    rho_hat: float
    claims_mean: float
    ladder_mass: float
    drift: float
    model: RiskModel

    def integrated_tail_density(self, z):
        return self.model.claims.tail(z) / self.claims_mean

    def integrated_tail(self, z):
        return self.model.claims.integrated_tail(z)

    def ladder_ratio(self, z):
        """Density of ``Pi_H(dz) / q``: the law ``G`` scaled by the odds of a ladder step."""
        return self.ladder_mass * self.integrated_tail_density(z)

    @property
    def killing_fraction(self) -> float:
        """``q / (q + Pi_H(0, inf))``: probability that a ladder step is the last."""
        return 1.0 - self.rho_hat


@dataclass(frozen=True)
class OvershootLaw:
    atom: float
    density: Callable[[np.ndarray], np.ndarray]
    cdf_fn: Callable[[np.ndarray], np.ndarray]
    scale: float = 1.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, np.clip(self.atom + self.cdf_fn(np.maximum(x, 0.0)), 0.0, 1.0))

    def mass(self, epsrel: float = 1e-10) -> float:
        """Total mass by adaptive quadrature of the density (independent of ``cdf``)."""
        f = lambda g: float(self.density(np.array([g]))[0])
        knot = 10.0 * self.scale
        a, _ = integrate.quad(f, 0.0, knot, epsabs=0.0, epsrel=epsrel, limit=400)
        b, _ = integrate.quad(f, knot, np.inf, epsabs=0.0, epsrel=epsrel, limit=400)
        return self.atom + a + b


def _require_negative_drift(model: RiskModel) -> None:
    if not model.premium > 0:
        raise RegimeError(f"ladder quantities need premium > 0, got p={model.premium}")
    if mean_increment(model) >= 0:
        raise RegimeError("E X_1 >= 0: the ladder process is not killed and sup X is infinite")


def ladder_data(model: RiskModel) -> LadderData:
    _require_negative_drift(model)
    mu = model.claims.mean
    rho = model.lam * mu / model.premium
    return LadderData(rho, mu, model.lam * mu / (model.premium - model.lam * mu), 0.0, model)


def sup_mgf_infinity(model: RiskModel, alpha: float) -> float:
    """``E e^{alpha sup_t X_t}`` from the geometric compound form.

    Returns a :class:`RegimeInfinity` when ``psi(alpha) >= 0``.
    """
    ladder = ladder_data(model)
    if alpha == 0:
        return 1.0
    psi = cumulant(model, alpha)
    if psi >= 0:
        return RegimeInfinity(Regime.CRITICAL if psi == 0 else Regime.SUPERCRITICAL)
    g_hat = (model.claims.mgf(alpha) - 1.0) / (alpha * ladder.claims_mean)
    rho = ladder.rho_hat
    return (1.0 - rho) / (1.0 - rho * g_hat)


def infinite_horizon_constant(model: RiskModel, alpha: float) -> float:
    """``lim B(T)`` as ``T -> inf``: ``int_0^inf e^{psi t} dt * E e^{alpha sup X}``."""
    psi = cumulant(model, alpha)
    value = sup_mgf_infinity(model, alpha)
    if isinstance(value, RegimeInfinity):
        return value
    return value / (-psi)


def _ladder_tilt(model: RiskModel) -> float:
    """Tilt for the ladder walk: the claim index if psi < 0 there, else the minimiser of psi."""
    claims = model.claims
    top = claims.abscissa
    if claims.abscissa_included and cumulant(model, top) < 0:
        return top
    hi = top if claims.abscissa_included else top * (1.0 - 1e-9)
    res = optimize.minimize_scalar(lambda b: cumulant(model, b), bounds=(0.0, hi), method="bounded",
                                   options={"xatol": 1e-10})
    return float(res.x)


def ruin_prob_infinite(
    model: RiskModel,
    u: float,
    replicas: int = 10**6,
    seed: int = 0,
    method: str = "esscher",
    threads: int | None = None,
) -> MCEstimate:
    """``P(tau(u) < inf)`` as the tail of a geometric compound of ladder heights.

    Exponential claims use the closed form.  Otherwise ``S_N`` is a sum of
    ``N ~ Geometric`` ladder heights with law ``G`` and

    * ``method='crude'`` averages ``1{S_N > u}``;
    * ``method='conditional'`` averages ``N Gbar(max(M_{N-1}, u - S_{N-1}))``,
      integrating out the largest ladder height;
    * ``method='esscher'`` does the same under the ladder walk tilted by
      ``e^{beta x}``, which turns the exponentially light part of the tail
      into a regularly varying one where the conditional estimator has
      bounded relative error.
    """
    ladder = ladder_data(model)
    rho = ladder.rho_hat
    claims = model.claims
    if u <= 0:
        return MCEstimate(rho, 0.0, 0, seed, "ladder/exact")
    if isinstance(claims, Exponential):
        eta = claims.rate
        value = rho * math.exp(-(eta - model.lam / model.premium) * u)
        return MCEstimate(value, 0.0, 0, seed, "ladder/exact")
    if method not in ("esscher", "conditional", "crude"):
        raise ValueError(f"unknown method {method!r}")
    mu = ladder.claims_mean
    if method == "esscher":
        beta = _ladder_tilt(model)
        g_hat = (claims.mgf(beta) - 1.0) / (beta * mu)
        success = rho * g_hat
        scale = (1.0 - rho) / (g_hat * (1.0 - success))
    else:
        beta, success, scale = 0.0, rho, 1.0

    def block(gen, b, n):
        count = gen.geometric(1.0 - success, size=n) - 1
        if method == "crude":
            draws = claims.sample_integrated_tail(gen, int(count.sum()))
            owner = np.repeat(np.arange(n), count)
            total = np.bincount(owner, weights=draws, minlength=n)
            return rng.Moments.of((total > u).astype(float))
        k = np.maximum(count - 1, 0)
        if method == "esscher":
            draws = claims.sample_tilted_integrated_tail(gen, int(k.sum()), beta)
        else:
            draws = claims.sample_integrated_tail(gen, int(k.sum()))
        owner = np.repeat(np.arange(n), k)
        partial = np.bincount(owner, weights=draws, minlength=n)
        largest = np.zeros(n)
        np.maximum.at(largest, owner, draws)
        z = np.zeros(n)
        hit = count > 0
        arg = np.maximum(largest[hit], u - partial[hit])
        z[hit] = scale * count[hit] * np.exp(-beta * partial[hit]) * claims.integrated_tail(arg)
        return rng.Moments.of(z)

    parts = rng.map_blocks(block, replicas, seed, rng.TAG_LADDER, threads)
    mom = rng.merge_all(parts)
    return MCEstimate(mom.mean, mom.std_error, replicas, seed, f"ladder/{method}")


def _tilted_integral(model: RiskModel, alpha: float):
    claims = model.claims
    j0 = float(np.asarray(claims.tilted_tail_integral(0.0, alpha)))
    mu = claims.mean

    def j(g):
        return np.asarray(claims.tilted_tail_integral(g, alpha), dtype=float)

    def head(x):
        # int_0^x e^{-alpha g} J(g) dg with J(g) = int_g^inf e^{alpha y} Fbar(y) dy
        return (j0 - np.exp(-alpha * x) * j(x) - mu * (1.0 - claims.integrated_tail(x))) / alpha

    return j, head


def overshoot_law_infinite(model: RiskModel, alpha: float) -> OvershootLaw:
    """Limit of the overshoot law given ruin, as ``u -> inf`` with ``T = inf``.

    Density ``alpha e^{-alpha g} / E e^{alpha sup X}
    + alpha r int_0^inf e^{alpha y} Fbar(y + g) dy`` with
    ``r = lam / (p - lam mu)``; no atom since compound Poisson ladder heights
    have no drift.
    """
    ladder = ladder_data(model)
    psi = cumulant(model, alpha)
    if psi >= 0:
        raise RegimeError(f"psi(alpha) = {psi:.3g} >= 0: use overshoot_law_cramer or finite T")
    m_inf = sup_mgf_infinity(model, alpha)
    r = model.lam / (model.premium - model.lam * ladder.claims_mean)
    j, head = _tilted_integral(model, alpha)

    def density(g):
        g = np.asarray(g, dtype=float)
        return alpha * np.exp(-alpha * g) * (1.0 / m_inf + r * j(g))

    def cdf(x):
        return -np.expm1(-alpha * x) / m_inf + alpha * r * head(x)

    return OvershootLaw(0.0, density, cdf, 1.0 / alpha)


def overshoot_law_cramer(model: RiskModel, alpha: float) -> OvershootLaw:
    """Limiting overshoot law at the Cramér point ``psi(alpha) = 0``."""
    ladder = ladder_data(model)
    psi = cumulant(model, alpha)
    if abs(psi) > CRAMER_TOL:
        raise RegimeError(f"|psi(alpha)| = {abs(psi):.3g} exceeds {CRAMER_TOL}; tune the premium first")
    if not math.isfinite(cumulant_derivative(model, alpha, 1)):
        raise RegimeError("E X_1 e^{alpha X_1} is infinite at the Cramér point")
    r = model.lam / (model.premium - model.lam * ladder.claims_mean)
    j, head = _tilted_integral(model, alpha)

    def density(g):
        g = np.asarray(g, dtype=float)
        return alpha * r * np.exp(-alpha * g) * j(g)

    def cdf(x):
        return alpha * r * head(x)

    return OvershootLaw(0.0, density, cdf, 1.0 / alpha)


def overshoot_law_subordinator(model: RiskModel, alpha: float | None = None) -> OvershootLaw:
    """Overshoot laws of a driftless compound Poisson subordinator (``p = 0``).

    Without ``alpha`` this is the renewal-theory limit, the integrated-tail
    law.  With ``alpha`` it is the exponentially weighted variant with density
    ``(alpha lam / psi(alpha)) int_0^inf e^{alpha y} F(y + dg) dy``.
    """
    if model.premium != 0:
        raise RegimeError(f"subordinator overshoot laws need p = 0, got p={model.premium}")
    claims = model.claims
    mu = claims.mean
    if alpha is None:
        return OvershootLaw(
            0.0,
            lambda g: claims.tail(g) / mu,
            lambda x: 1.0 - claims.integrated_tail(x),
            mu,
        )
    psi = cumulant(model, alpha)
    c = alpha * model.lam / psi
    j0 = float(np.asarray(claims.tilted_tail_integral(0.0, alpha)))

    def density(g):
        g = np.asarray(g, dtype=float)
        # int_g^inf e^{alpha (x-g)} f(x) dx by parts
        inner = claims.tail(g) + alpha * np.exp(-alpha * g) * claims.tilted_tail_integral(g, alpha)
        return c * inner

    def cdf(x):
        return c * (j0 - np.exp(-alpha * x) * claims.tilted_tail_integral(x, alpha))

    return OvershootLaw(0.0, density, cdf, 1.0 / alpha)


def vigon_check(model: RiskModel, z_grid=None, perturb: float = 1.0) -> float:
    """Largest relative gap between the two sides of the ladder/Lévy measure identity.

    Left: ``Pi_H / q`` from the ladder decomposition (odds of a ladder step
    times the integrated-tail density).  Right: the descending renewal measure
    of a spectrally positive process is Lebesgue, so ``Pi_H`` is proportional
    to ``Pi_X`` integrated from ``z`` upward, i.e. ``lam Fbar(z) / (p - lam mu)``.
    ``perturb`` scales the left side to check that the comparison can fail.
    """
    ladder = ladder_data(model)
    z = np.asarray([0.5, 1.0, 2.0, 4.0] if z_grid is None else z_grid, dtype=float)
    left = perturb * ladder.ladder_ratio(z)
    right = model.lam * model.claims.tail(z) / (model.premium - model.lam * ladder.claims_mean)
    return float(np.max(np.abs(left - right) / np.abs(right)))
