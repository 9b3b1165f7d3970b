"""Exact event-driven simulation of compound Poisson paths with linear drift.

Paths are stored in CSR form (``offsets`` into flat ``epochs``/``sizes``) so a
block of replicas is generated with a handful of vectorised draws and reduced
by compiled kernels.  Running suprema and first passages are read off the jump
epochs exactly; there is no time grid anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import rng
from .errors import ConfigError, BudgetError, NoHitsError
from .model import RiskModel, cumulant, cumulant_derivative, esscher_model, mean_increment

__all__ = [
    "PathSample",
    "PathBatch",
    "PassageEvent",
    "MCEstimate",
    "simulate_batch",
    "sample_path",
    "running_sup",
    "first_passage",
    "estimate_sup_mgf",
    "estimate_sup_mgf_curve",
    "estimate_ruin_prob",
    "estimate_tail_prob",
    "ruin_sample",
    "surrogate_horizon",
]

NO_PASSAGE = 0
JUMP = 1
DRIFT = 2
_MODE_NAMES = {JUMP: "jump", DRIFT: "drift"}


@dataclass(frozen=True)
class PathSample:
    """One trajectory ``X_t = sum_{t_i <= t} u_i - p t`` on ``[0, horizon]``."""

    horizon: float
    epochs: np.ndarray
    sizes: np.ndarray
    premium: float

    def value(self, t: float) -> float:
        k = np.searchsorted(self.epochs, t, side="right")
        return float(self.sizes[:k].sum() - self.premium * t)


@dataclass(frozen=True)
class PathBatch:
    offsets: np.ndarray
    epochs: np.ndarray
    sizes: np.ndarray
    premium: float
    horizons: np.ndarray

    @property
    def n(self) -> int:
        return self.offsets.size - 1

    def path(self, i: int) -> PathSample:
        a, b = self.offsets[i], self.offsets[i + 1]
        return PathSample(float(self.horizons[i]), self.epochs[a:b], self.sizes[a:b], self.premium)

    @classmethod
    def from_paths(cls, paths: list[PathSample]) -> "PathBatch":
        counts = np.array([p.epochs.size for p in paths], dtype=np.int64)
        offsets = np.concatenate(([0], np.cumsum(counts)))
        epochs = np.concatenate([np.asarray(p.epochs, float) for p in paths]) if paths else np.empty(0)
        sizes = np.concatenate([np.asarray(p.sizes, float) for p in paths]) if paths else np.empty(0)
        premiums = {p.premium for p in paths}
        if len(premiums) != 1:
            raise ValueError("paths in a batch must share the premium rate")
        return cls(offsets, epochs, sizes, premiums.pop(), np.array([p.horizon for p in paths], float))


@dataclass(frozen=True)
class PassageEvent:
    """First passage of a path strictly above a level.

    ``presup`` is the supremum strictly before ``tau`` and ``prejump`` the
    left limit ``X_{tau-}``.
    """

    tau: float | None
    overshoot: float | None = None
    mode: str | None = None
    presup: float | None = None
    prejump: float | None = None


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    std_error: float
    replicas: int
    seed: int
    method: str
    hits: int | None = None
    flags: tuple[str, ...] = field(default=())

    @property
    def no_hits(self) -> bool:
        return "no hits" in self.flags


def simulate_batch(model: RiskModel, horizons, n: int, gen: np.random.Generator) -> PathBatch:
    """Simulate ``n`` independent paths, each on its own ``[0, horizon]``."""
    h = np.broadcast_to(np.asarray(horizons, dtype=float), (n,)).copy()
    counts = gen.poisson(model.lam * h)
    total = int(counts.sum())
    rep = np.repeat(np.arange(n), counts)
    epochs = gen.random(total) * h[rep]
    epochs = epochs[np.lexsort((epochs, rep))]
    sizes = model.claims.sample(gen, total) if total else np.empty(0)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return PathBatch(offsets, epochs, sizes, float(model.premium), h)


def sample_path(model: RiskModel, T: float, gen: np.random.Generator) -> PathSample:
    return simulate_batch(model, T, 1, gen).path(0)


@numba.njit(cache=True)
def _sup_and_value(offsets, epochs, sizes, p, times):
    """Running supremum and value of every path at each of the sorted ``times``."""
    n = offsets.size - 1
    nt = times.size
    sup = np.empty((n, nt))
    val = np.empty((n, nt))
    for i in range(n):
        j = offsets[i]
        end = offsets[i + 1]
        cum = 0.0
        m = 0.0
        for k in range(nt):
            t = times[k]
            while j < end and epochs[j] <= t:
                cum += sizes[j]
                post = cum - p * epochs[j]
                if post > m:
                    m = post
                j += 1
            v = cum - p * t
            val[i, k] = v
            # between jumps the path is monotone, so the supremum is either a
            # post-jump value or the current value
            sup[i, k] = m if m > v else v
    return sup, val


@numba.njit(cache=True)
def _sup_and_value_at(offsets, epochs, sizes, p, t_each):
    n = offsets.size - 1
    sup = np.empty(n)
    val = np.empty(n)
    for i in range(n):
        t = t_each[i]
        cum = 0.0
        m = 0.0
        for j in range(offsets[i], offsets[i + 1]):
            if epochs[j] > t:
                break
            cum += sizes[j]
            post = cum - p * epochs[j]
            if post > m:
                m = post
        v = cum - p * t
        val[i] = v
        sup[i] = m if m > v else v
    return sup, val


@numba.njit(cache=True)
def _passage(offsets, epochs, sizes, p, levels, horizons):
    """First passage of each path over its own level before its own horizon.

    Returns ``tau`` (NaN if none), value ``X_tau``, crossing mode, supremum
    strictly before ``tau`` and the left limit ``X_{tau-}``.
    """
    n = offsets.size - 1
    tau = np.full(n, np.nan)
    xtau = np.full(n, np.nan)
    mode = np.zeros(n, dtype=np.int8)
    presup = np.full(n, np.nan)
    prejump = np.full(n, np.nan)
    for i in range(n):
        lev = levels[i]
        h = horizons[i]
        x = 0.0
        tprev = 0.0
        run = 0.0
        done = False
        for j in range(offsets[i], offsets[i + 1]):
            e = epochs[j]
            if e > h:
                break
            if p < 0.0 and x - p * (e - tprev) > lev:
                ts = tprev + (lev - x) / (-p)
                tau[i] = ts
                xtau[i] = lev
                mode[i] = 2
                presup[i] = lev
                prejump[i] = lev
                done = True
                break
            xpre = x - p * (e - tprev)
            if xpre > run:
                run = xpre
            xpost = xpre + sizes[j]
            if xpost > lev:
                tau[i] = e
                xtau[i] = xpost
                mode[i] = 1
                presup[i] = run
                prejump[i] = xpre
                done = True
                break
            x = xpost
            tprev = e
            if x > run:
                run = x
        if not done and p < 0.0 and x - p * (h - tprev) > lev:
            ts = tprev + (lev - x) / (-p)
            if ts < h:
                tau[i] = ts
                xtau[i] = lev
                mode[i] = 2
                presup[i] = lev
                prejump[i] = lev
    return tau, xtau, mode, presup, prejump


@numba.njit(cache=True)
def _passage_multi(offsets, epochs, sizes, p, levels, horizon):
    """First passage times and values over every level of an ascending grid."""
    n = offsets.size - 1
    nl = levels.size
    tau = np.full((n, nl), np.nan)
    xtau = np.full((n, nl), np.nan)
    for i in range(n):
        k = 0
        x = 0.0
        tprev = 0.0
        for j in range(offsets[i], offsets[i + 1]):
            e = epochs[j]
            if e > horizon or k >= nl:
                break
            if p < 0.0:
                xend = x - p * (e - tprev)
                while k < nl and levels[k] < xend:
                    tau[i, k] = tprev + max(levels[k] - x, 0.0) / (-p)
                    xtau[i, k] = max(levels[k], x)
                    k += 1
            xpost = x - p * (e - tprev) + sizes[j]
            while k < nl and levels[k] < xpost:
                tau[i, k] = e
                xtau[i, k] = xpost
                k += 1
            x = xpost
            tprev = e
        if p < 0.0:
            xend = x - p * (horizon - tprev)
            while k < nl and levels[k] < xend:
                tau[i, k] = tprev + max(levels[k] - x, 0.0) / (-p)
                xtau[i, k] = max(levels[k], x)
                k += 1
    return tau, xtau


def running_sup(path: PathSample, t: float) -> float:
    """Exact ``sup_{0<=s<=t} X_s`` of a single path."""
    if not 0.0 <= t <= path.horizon:
        raise ValueError(f"t={t} outside [0, {path.horizon}]")
    b = PathBatch.from_paths([path])
    sup, _ = _sup_and_value(b.offsets, b.epochs, b.sizes, b.premium, np.array([float(t)]))
    return float(sup[0, 0])


def first_passage(path: PathSample, u: float) -> PassageEvent:
    """Exact first time the path is strictly above ``u`` on ``[0, horizon]``."""
    b = PathBatch.from_paths([path])
    tau, xtau, mode, presup, prejump = _passage(
        b.offsets, b.epochs, b.sizes, b.premium, np.array([float(u)]), b.horizons
    )
    if mode[0] == NO_PASSAGE:
        return PassageEvent(None)
    return PassageEvent(
        float(tau[0]),
        float(xtau[0] - u),
        _MODE_NAMES[int(mode[0])],
        float(presup[0]),
        float(prejump[0]),
    )


def passage_of_batch(batch: PathBatch, levels) -> tuple[np.ndarray, ...]:
    lev = np.broadcast_to(np.asarray(levels, dtype=float), (batch.n,)).copy()
    return _passage(batch.offsets, batch.epochs, batch.sizes, batch.premium, lev, batch.horizons)


def sup_and_value(batch: PathBatch, times) -> tuple[np.ndarray, np.ndarray]:
    return _sup_and_value(batch.offsets, batch.epochs, batch.sizes, batch.premium, np.asarray(times, float))


def sup_and_value_at(batch: PathBatch, t_each) -> tuple[np.ndarray, np.ndarray]:
    return _sup_and_value_at(batch.offsets, batch.epochs, batch.sizes, batch.premium, np.asarray(t_each, float))


def passage_multi(batch: PathBatch, levels, horizon: float) -> tuple[np.ndarray, np.ndarray]:
    return _passage_multi(batch.offsets, batch.epochs, batch.sizes, batch.premium, np.asarray(levels, float), float(horizon))


def _finish(parts: list[rng.Moments], replicas, seed, method, scale=1.0, hits=None, flags=()):
    mom = rng.merge_all(parts)
    flags = tuple(flags)
    if hits == 0:
        flags += ("no hits",)
    return MCEstimate(scale * mom.mean, abs(scale) * mom.std_error, replicas, seed, method, hits, flags)


def _check_sampler(sampler: str) -> None:
    if sampler not in ("direct", "esscher"):
        raise ConfigError(f"unknown sampler {sampler!r}; use 'direct' or 'esscher'")


def estimate_sup_mgf_curve(model, alpha, times, replicas, seed, sampler="esscher", threads=None):
    """``E e^{alpha Xbar_t}`` on a grid of times from one set of paths.

    With ``sampler='esscher'`` paths run under the tilted measure and the
    estimator is ``e^{psi t} e^{alpha (Xbar_t - X_t)}``, which is bounded by
    ``e^{psi t + alpha p t}``; the direct estimator ``e^{alpha Xbar_t}`` has
    infinite variance for convolution equivalent claims.

    Returns ``(estimates, std_errors)``.
    """
    _check_sampler(sampler)
    times = np.asarray(times, dtype=float)
    psi = cumulant(model, alpha)
    sim = esscher_model(model, alpha) if sampler == "esscher" else model
    horizon = float(times.max()) if times.size else 0.0
    order = np.argsort(times)

    def block(gen, b, n):
        batch = simulate_batch(sim, horizon, n, gen)
        sup, val = sup_and_value(batch, times[order])
        if sampler == "esscher":
            vals = np.exp(alpha * (sup - val))
        else:
            vals = np.exp(alpha * sup)
        return [rng.Moments.of(vals[:, k]) for k in range(times.size)]

    parts = rng.map_blocks(block, replicas, seed, rng.TAG_SUP_MGF, threads)
    est = np.empty(times.size)
    se = np.empty(times.size)
    for k, idx in enumerate(order):
        mom = rng.merge_all([p[k] for p in parts])
        scale = math.exp(psi * times[idx]) if sampler == "esscher" else 1.0
        est[idx] = scale * mom.mean
        se[idx] = scale * mom.std_error
    return est, se


def estimate_sup_mgf(model, alpha, t, replicas, seed, sampler="esscher", threads=None) -> MCEstimate:
    """Monte Carlo estimate of ``E e^{alpha Xbar_t}``."""
    _check_sampler(sampler)
    if t == 0:
        return MCEstimate(1.0, 0.0, replicas, seed, f"sup-mgf/{sampler}")
    est, se = estimate_sup_mgf_curve(model, alpha, [t], replicas, seed, sampler, threads)
    return MCEstimate(float(est[0]), float(se[0]), replicas, seed, f"sup-mgf/{sampler}")


def _tilt_check(model: RiskModel, alpha: float) -> float:
    if not model.claims.in_domain(alpha):
        raise ConfigError(f"Esscher tilt alpha={alpha} outside the MGF domain of the claims")
    return cumulant(model, alpha)


def _passage_until_hit(model: RiskModel, levels: np.ndarray, gen: np.random.Generator, max_rounds: int):
    """Run each path jump by jump until it passes its level (no horizon)."""
    n = levels.size
    lam = model.lam
    p = model.premium
    x = np.zeros(n)
    t = np.zeros(n)
    tau = np.full(n, np.nan)
    xtau = np.full(n, np.nan)
    active = np.arange(n)
    for _ in range(max_rounds):
        if active.size == 0:
            return tau, xtau
        e = gen.exponential(1.0 / lam, size=active.size)
        u = model.claims.sample(gen, active.size)
        xa, ta, lev = x[active], t[active], levels[active]
        hit = np.zeros(active.size, dtype=bool)
        if p < 0:
            drift_hit = xa - p * e > lev
            ts = ta + (lev - xa) / (-p)
            tau[active[drift_hit]] = ts[drift_hit]
            xtau[active[drift_hit]] = lev[drift_hit]
            hit |= drift_hit
        xpost = xa - p * e + u
        jump_hit = ~hit & (xpost > lev)
        tau[active[jump_hit]] = (ta + e)[jump_hit]
        xtau[active[jump_hit]] = xpost[jump_hit]
        hit |= jump_hit
        x[active] = xpost
        t[active] = ta + e
        active = active[~hit]
    raise BudgetError(f"{active.size} paths did not pass their level within {max_rounds} jumps")


def ruin_sample(model, u, T, replicas, seed, importance=None, threads=None, max_rounds=1_000_000):
    """Per-replica passage data over level ``u`` before ``T``.

    Returns ``(tau, overshoot, weight)`` for every replica; paths without
    passage have NaN ``tau`` and weight 0.  With ``importance=alpha`` paths
    run under the Esscher model and carry the likelihood ratio
    ``exp(-alpha X_tau + psi(alpha) tau)``.  ``T = inf`` is only available with
    importance sampling and a positive drift under the tilted measure.
    """
    infinite = math.isinf(T)
    if importance is None:
        if infinite:
            raise ConfigError("direct mode needs a finite horizon; see surrogate_horizon")
        sim, psi, alpha = model, 0.0, 0.0
    else:
        alpha = float(importance)
        psi = _tilt_check(model, alpha)
        sim = esscher_model(model, alpha)
        if infinite and not cumulant_derivative(model, alpha, 1) > 0:
            raise ConfigError("infinite-horizon importance sampling needs psi'(alpha) > 0")

    def block(gen, b, n):
        levels = np.full(n, float(u))
        if infinite:
            tau, xtau = _passage_until_hit(sim, levels, gen, max_rounds)
        else:
            batch = simulate_batch(sim, T, n, gen)
            tau, xtau, *_ = passage_of_batch(batch, levels)
        hit = ~np.isnan(tau)
        w = np.zeros(n)
        if importance is None:
            w[hit] = 1.0
        else:
            w[hit] = np.exp(-alpha * xtau[hit] + psi * tau[hit])
        return tau, xtau - u, w

    parts = rng.map_blocks(block, replicas, seed, rng.TAG_RUIN, threads)
    tau = np.concatenate([p[0] for p in parts]) if parts else np.empty(0)
    over = np.concatenate([p[1] for p in parts]) if parts else np.empty(0)
    w = np.concatenate([p[2] for p in parts]) if parts else np.empty(0)
    return tau, over, w


def surrogate_horizon(model: RiskModel, u: float, target: float, fraction: float = 0.01) -> float:
    """Horizon ``H`` after which ruin has probability below ``fraction * target``.

    Uses ``P(ruin after H) <= E e^{b (X_H - u)} = e^{-b u + psi(b) H}`` for the
    ``b`` minimising ``psi`` on the positive half line (``e^{b X}`` is then a
    supermartingale).
    """
    if mean_increment(model) >= 0:
        raise ConfigError("no finite surrogate horizon: E X_1 >= 0 so ruin is certain")
    hi = model.claims.abscissa
    from scipy.optimize import minimize_scalar

    top = hi if model.claims.abscissa_included else hi * (1 - 1e-9)
    res = minimize_scalar(lambda b: cumulant(model, b), bounds=(0.0, top), method="bounded",
                          options={"xatol": 1e-10})
    b, psi_b = float(res.x), float(res.fun)
    h = (math.log(fraction * target) + b * u) / psi_b
    return max(h, 1.0)


def estimate_ruin_prob(model, u, T, replicas, seed, importance=None, threads=None) -> MCEstimate:
    """``P(tau(u) < T)`` by direct or Esscher importance-sampled Monte Carlo."""
    flags = []
    horizon = T
    if math.isinf(T) and importance is None:
        # pilot run fixes the surrogate horizon; the certificate is recorded in the flags
        pilot_h = surrogate_horizon(model, u, 1e-2)
        pilot = estimate_ruin_prob(model, u, pilot_h, max(replicas // 10, 1000), seed ^ 0x5EED, None, threads)
        if pilot.hits == 0:
            raise NoHitsError("pilot run for the surrogate horizon produced no ruin")
        horizon = surrogate_horizon(model, u, 0.5 * pilot.estimate)
        flags.append(f"surrogate_horizon={horizon:.6g}")
    tau, _, w = ruin_sample(model, u, horizon, replicas, seed, importance, threads)
    hits = int(np.count_nonzero(~np.isnan(tau)))
    mom = rng.Moments.of(w)
    method = "ruin/direct" if importance is None else f"ruin/esscher({importance})"
    if hits == 0:
        flags.append("no hits")
    return MCEstimate(mom.mean, mom.std_error, replicas, seed, method, hits, tuple(flags))


def estimate_tail_prob(model, u, T, replicas, seed, importance=None, threads=None) -> MCEstimate:
    """``P(X_T > u)`` by direct or Esscher importance-sampled Monte Carlo."""
    if importance is None:
        sim, psi, alpha = model, 0.0, 0.0
    else:
        alpha = float(importance)
        psi = _tilt_check(model, alpha)
        sim = esscher_model(model, alpha)

    def block(gen, b, n):
        batch = simulate_batch(sim, T, n, gen)
        _, val = sup_and_value(batch, [T])
        x = val[:, 0]
        hit = x > u
        w = np.where(hit, np.exp(-alpha * x + psi * T) if importance is not None else 1.0, 0.0)
        return rng.Moments.of(w), int(hit.sum())

    parts = rng.map_blocks(block, replicas, seed, rng.TAG_TAIL, threads)
    hits = sum(p[1] for p in parts)
    method = "tail/direct" if importance is None else f"tail/esscher({importance})"
    return _finish([p[0] for p in parts], replicas, seed, method, hits=hits)
