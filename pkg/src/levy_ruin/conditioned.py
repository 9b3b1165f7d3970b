"""Sampling the limit of a ruin path conditioned on ruin before ``T``.

The limiting object is a triple: an Esscher-transformed path ``Z`` run up to
a jump time ``tau``, a post-jump offset ``W_0`` relative to the barrier, and a
path ``W`` started at ``W_0`` and conditioned to pass ``0`` in the remaining
time ``s = T - tau``.  Jointly,

    P(tau in dt, W_0 in dz) ∝ e^{psi t} alpha e^{-alpha z} P_z(tau(0) < T - t) dt dz,

so ``tau`` is the Esscher killing time tilted by ``m(T - t) = E e^{alpha Xbar_{T-t}}``.

Passage probabilities ``p(l, s) = P(tau(l) < s)`` are tabulated once on an
(level, time) grid by Esscher importance sampling.  Given ``W_0 = -l <= 0``
the path is drawn exactly by rejection from Esscher proposals: under the
tilted law the likelihood ratio on ``{tau(l) < s}`` is
``e^{-alpha (l + O) + psi tau(l)}``, which after dropping the constant
``e^{-alpha l}`` is bounded by ``e^{psi^+ s}``.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .errors import BudgetError, ConfigError, GridError, NoHitsError, RejectionBudgetError
from .model import RiskModel, cumulant, esscher_model
from .paths import passage_multi, passage_of_batch, ruin_sample, simulate_batch, sup_and_value_at

__all__ = [
    "PassageGrid",
    "LimitTriple",
    "LimitSample",
    "ReferenceSample",
    "sample_tau",
    "tau_cdf",
    "build_passage_grid",
    "sample_w0",
    "sample_limit_triple",
    "sample_limit_triples",
    "conditional_mc_reference",
    "GRID_FORMAT_VERSION",
]

GRID_FORMAT_VERSION = 1
CERTIFICATE = 1e-4
MIN_ACCEPTANCE = 1e-4
_P_FLOOR = 1e-300


def sample_tau(model: RiskModel, alpha: float, T: float, gen: np.random.Generator, size=None):
    """Esscher killing time with density ``psi e^{psi t} / (e^{psi T} - 1)`` on ``[0, T)``."""
    psi = cumulant(model, alpha)
    u = gen.random(size)
    return _tau_from_uniform(u, psi, T)


def _tau_from_uniform(u, psi: float, T: float):
    if psi == 0.0:
        return u * T
    return np.log1p(u * np.expm1(psi * T)) / psi


def tau_cdf(t, psi: float, T: float):
    t = np.clip(np.asarray(t, dtype=float), 0.0, T)
    if psi == 0.0:
        return t / T
    return np.expm1(psi * t) / np.expm1(psi * T)


def model_digest(model: RiskModel) -> str:
    return hashlib.sha256(model.spec.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PassageGrid:
    """``p(l, s) = P(tau(l) < s)`` on levels ``l >= 0`` and times ``s in [0, T]``.

    In terms of the start point ``z = -l`` this is ``P_z(tau(0) < s)``; for
    ``z > 0`` it is ``1``.  ``std_error`` holds Monte Carlo standard errors.
    """

    levels: np.ndarray
    times: np.ndarray
    prob: np.ndarray
    std_error: np.ndarray
    alpha: float
    psi: float
    model_spec: str
    replicas: int
    seed: int

    @property
    def z_max(self) -> float:
        return float(self.levels[-1])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def _slopes(self, row: np.ndarray):
        p = np.maximum(row, _P_FLOOR)
        dl = np.diff(self.levels)
        kappa = np.diff(np.log(p)) / dl
        return p, dl, kappa

    def _segment_masses(self, j: int) -> np.ndarray:
        """Mass of ``alpha e^{alpha l} p(l, s_j)`` on each level segment (log-linear ``p``)."""
        row = self.prob[:, j]
        if not row.any():
            return np.zeros(self.levels.size - 1)
        p, dl, kappa = self._slopes(row)
        r = self.alpha + kappa
        a = self.levels[:-1]
        start = self.alpha * p[:-1] * np.exp(self.alpha * a)
        with np.errstate(over="ignore", invalid="ignore"):
            seg = np.where(np.abs(r * dl) > 1e-12, start * np.expm1(r * dl) / np.where(r == 0, 1, r), start * dl)
        return np.where(row[:-1] + row[1:] > 0, seg, 0.0)

    def _time_index(self, s: float) -> tuple[int, float]:
        if not (0.0 <= s <= self.horizon * (1 + 1e-12)):
            raise GridError(f"remaining time {s} outside the grid [0, {self.horizon}]")
        s = min(s, self.horizon)
        j = int(np.searchsorted(self.times, s, side="right") - 1)
        j = min(j, self.times.size - 2)
        w = (s - self.times[j]) / (self.times[j + 1] - self.times[j])
        return j, float(w)

    def negative_mass(self, s: float) -> float:
        """``int_0^{z_max} alpha e^{alpha l} p(l, s) dl``; ``1 +`` this approximates ``E e^{alpha Xbar_s}``."""
        j, w = self._time_index(s)
        return (1 - w) * float(self._masses()[j].sum()) + w * float(self._masses()[j + 1].sum())

    def sup_mgf(self, s: float) -> float:
        return 1.0 + self.negative_mass(s)

    def _masses(self) -> np.ndarray:
        cache = self.__dict__.get("_mass_cache")
        if cache is None:
            cache = np.array([self._segment_masses(j) for j in range(self.times.size)])
            object.__setattr__(self, "_mass_cache", cache)
        return cache

    def p(self, level: float, s: float) -> float:
        """Interpolated ``P(tau(level) < s)``: log-linear in level, linear in time."""
        if level < 0:
            return 1.0
        if level > self.z_max:
            raise GridError(f"level {level} beyond z_max={self.z_max}")
        j, w = self._time_index(s)
        k = int(np.searchsorted(self.levels, level, side="right") - 1)
        k = min(k, self.levels.size - 2)
        frac = (level - self.levels[k]) / (self.levels[k + 1] - self.levels[k])

        def along(col):
            a, b = self.prob[k, col], self.prob[k + 1, col]
            if a <= 0 or b <= 0:
                return (1 - frac) * a + frac * b
            return a * (b / a) ** frac

        return (1 - w) * along(j) + w * along(j + 1)

    def certificate(self) -> float:
        """``alpha e^{alpha l} p(l, T)`` at ``z_max`` (plus two SE) over its maximum on the grid."""
        c = self.alpha * np.exp(self.alpha * self.levels) * self.prob[:, -1]
        top = self.alpha * math.exp(self.alpha * self.z_max) * (self.prob[-1, -1] + 2 * self.std_error[-1, -1])
        return float(top / c.max()) if c.max() > 0 else 0.0

    # persistence -----------------------------------------------------------
    def header(self) -> dict:
        return {
            "version": GRID_FORMAT_VERSION,
            "model": self.model_spec,
            "model_digest": hashlib.sha256(self.model_spec.encode()).hexdigest()[:16],
            "alpha": self.alpha,
            "horizon": self.horizon,
            "levels": self.levels.size,
            "times": self.times.size,
            "z_max": self.z_max,
            "replicas": self.replicas,
            "seed": self.seed,
        }

    def save(self, path) -> None:
        buf = io.BytesIO()
        np.savez(
            buf,
            header=np.frombuffer(json.dumps(self.header(), sort_keys=True).encode(), dtype=np.uint8),
            levels=self.levels,
            times=self.times,
            prob=self.prob,
            std_error=self.std_error,
            psi=np.array([self.psi]),
        )
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path) -> "PassageGrid":
        with np.load(path) as data:
            header = json.loads(bytes(data["header"]).decode())
            if header.get("version") != GRID_FORMAT_VERSION:
                raise ConfigError(f"grid file version {header.get('version')} != {GRID_FORMAT_VERSION}")
            return cls(
                data["levels"].copy(),
                data["times"].copy(),
                data["prob"].copy(),
                data["std_error"].copy(),
                float(header["alpha"]),
                float(data["psi"][0]),
                header["model"],
                int(header["replicas"]),
                int(header["seed"]),
            )

    def matches(self, model: RiskModel, alpha: float, T: float) -> bool:
        return self.model_spec == model.spec and self.alpha == alpha and self.horizon == T


def _grid_once(model, alpha, T, levels, times, replicas, seed, threads):
    psi = cumulant(model, alpha)
    sim = esscher_model(model, alpha)
    nl, ns = levels.size, times.size

    def block(gen, b, n):
        batch = simulate_batch(sim, T, n, gen)
        tau, xtau = passage_multi(batch, levels, T)
        hit = ~np.isnan(tau)
        w = np.where(hit, np.exp(np.where(hit, -alpha * xtau + psi * tau, 0.0)), 0.0)
        t = np.where(hit, tau, np.inf)
        s1 = np.empty((nl, ns))
        s2 = np.empty((nl, ns))
        for j, s in enumerate(times):
            v = np.where(t < s, w, 0.0)
            s1[:, j] = v.sum(axis=0)
            s2[:, j] = (v * v).sum(axis=0)
        return s1, s2

    parts = rng.map_blocks(block, replicas, seed, rng.TAG_GRID, threads)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / replicas
    var = np.maximum(s2 / replicas - mean * mean, 0.0) * replicas / max(replicas - 1, 1)
    return mean, np.sqrt(var / replicas)


def build_passage_grid(
    model: RiskModel,
    alpha: float,
    T: float,
    z_max: float = 16.0,
    n_levels: int = 64,
    n_times: int = 41,
    replicas: int = 2 * 10**5,
    seed: int = 0,
    threads: int | None = None,
    max_doublings: int = 6,
    certificate: float = CERTIFICATE,
) -> PassageGrid:
    """Tabulate ``P(tau(l) < s)`` by Esscher importance sampling on shared paths.

    ``z_max`` is doubled until ``alpha e^{alpha l} p(l, T)`` at the top level
    falls below ``certificate`` times its maximum; ``BudgetError`` after
    ``max_doublings`` attempts.
    """
    if not z_max > 0:
        raise ConfigError(f"z_max must be positive, got {z_max}")
    psi = cumulant(model, alpha)
    times = np.linspace(0.0, T, n_times)
    for _ in range(max_doublings + 1):
        lo = min(0.01 / alpha, z_max / 100)
        levels = np.concatenate(([0.0], np.geomspace(lo, z_max, n_levels - 1)))
        prob, se = _grid_once(model, alpha, T, levels, times, replicas, seed, threads)
        grid = PassageGrid(levels, times, prob, se, alpha, psi, model.spec, replicas, seed)
        if grid.certificate() < certificate:
            return grid
        z_max *= 2.0
    raise BudgetError(
        f"truncation certificate {grid.certificate():.2e} >= {certificate} at z_max={grid.z_max}"
    )


def sample_w0(grid: PassageGrid, alpha: float, s: float, gen: np.random.Generator, size: int | None = None):
    """Draws from the density proportional to ``alpha e^{-alpha z} P_z(tau(0) < s)``.

    The positive half is ``Exponential(alpha)`` with mass ``1``; the negative
    half uses the grid with ``p`` log-linear in the level, so each level
    segment has an exponential density sampled by inversion, and linear in
    time, which makes the density a two-row mixture.
    """
    if alpha != grid.alpha:
        raise ConfigError(f"grid was built for alpha={grid.alpha}, not {alpha}")
    n = 1 if size is None else int(size)
    j, w = grid._time_index(s)
    masses = grid._masses()
    m_lo = (1 - w) * masses[j].sum()
    m_hi = w * masses[j + 1].sum()
    total = 1.0 + m_lo + m_hi
    u = gen.random(n)
    out = np.empty(n)
    pos = u < 1.0 / total
    out[pos] = gen.exponential(1.0 / alpha, size=int(pos.sum()))
    neg = np.flatnonzero(~pos)
    if neg.size:
        use_hi = u[neg] >= (1.0 + m_lo) / total
        for flag, col in ((False, j), (True, j + 1)):
            idx = neg[use_hi == flag]
            if idx.size:
                out[idx] = -_sample_row(grid, col, gen, idx.size)
    return float(out[0]) if size is None else out


def _sample_row(grid: PassageGrid, col: int, gen, n: int) -> np.ndarray:
    seg = grid._masses()[col]
    cum = np.cumsum(seg)
    k = np.searchsorted(cum, gen.random(n) * cum[-1], side="right")
    k = np.minimum(k, seg.size - 1)
    _, dl, kappa = grid._slopes(grid.prob[:, col])
    r = grid.alpha + kappa[k]
    a = grid.levels[k]
    v = gen.random(n)
    rd = r * dl[k]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        x = np.where(np.abs(rd) > 1e-12, np.log1p(v * np.expm1(rd)) / np.where(r == 0, 1, r), v * dl[k])
    return a + np.clip(x, 0.0, dl[k])


@dataclass(frozen=True)
class LimitTriple:
    """One draw of the limiting conditioned path, summarised by its functionals."""

    tau: float
    w0: float
    tau0: float
    overshoot: float
    prejump: float
    z_path: object | None = None

    @property
    def passage_time(self) -> float:
        return self.tau + self.tau0


@dataclass(frozen=True)
class LimitSample:
    tau: np.ndarray
    w0: np.ndarray
    tau0: np.ndarray
    overshoot: np.ndarray
    prejump: np.ndarray
    proposals: int
    accepted_paths: int
    killing_time: np.ndarray

    @property
    def passage_time(self) -> np.ndarray:
        return self.tau + self.tau0

    def __len__(self) -> int:
        return self.tau.size

    def triple(self, i: int) -> LimitTriple:
        return LimitTriple(
            float(self.tau[i]), float(self.w0[i]), float(self.tau0[i]), float(self.overshoot[i]), float(self.prejump[i])
        )

    @property
    def acceptance_rate(self) -> float:
        return self.accepted_paths / self.proposals if self.proposals else 1.0


def _conditioned_paths(model, alpha, psi, levels, horizons, gen, grid: PassageGrid, budget_floor):
    """Exact draws of ``(tau(l), O)`` for the base model given ``tau(l) < s``, by rejection."""
    n = levels.size
    sim = esscher_model(model, alpha)
    tau0 = np.full(n, np.nan)
    over = np.full(n, np.nan)
    todo = np.arange(n)
    proposals = 0
    bound = np.maximum(psi, 0.0) * horizons
    est = np.array([
        math.exp(alpha * l - b) * max(grid.p(l, s), 0.0) for l, s, b in zip(levels, horizons, bound)
    ])
    per = np.clip(np.ceil(1.5 / np.maximum(est, 1e-3)), 1, 512).astype(np.int64)
    while todo.size:
        reps = per[todo]
        owner = np.repeat(todo, reps)
        batch = simulate_batch(sim, horizons[owner], owner.size, gen)
        tau, xtau, *_ = passage_of_batch(batch, levels[owner])
        proposals += owner.size
        hit = ~np.isnan(tau)
        accept_p = np.zeros(owner.size)
        o = xtau[hit] - levels[owner][hit]
        accept_p[hit] = np.exp(-alpha * o + psi * tau[hit] - bound[owner][hit])
        ok = gen.random(owner.size) < accept_p
        # first accepted proposal of each draw, in proposal order
        first = np.flatnonzero(ok)
        owners_ok, idx = np.unique(owner[first], return_index=True)
        chosen = first[idx]
        tau0[owners_ok] = tau[chosen]
        over[owners_ok] = xtau[chosen] - levels[owners_ok]
        todo = todo[np.isnan(tau0[todo])]
        per[todo] = np.minimum(per[todo] * 2, 4096)
        accepted = n - todo.size
        if proposals >= budget_floor and accepted / proposals < MIN_ACCEPTANCE:
            raise RejectionBudgetError(
                f"path acceptance rate {accepted / proposals:.2e} below {MIN_ACCEPTANCE}; grid too coarse"
            )
    return tau0, over, proposals


def sample_limit_triples(
    model: RiskModel,
    alpha: float,
    T: float,
    grid: PassageGrid,
    size: int,
    seed: int,
    threads: int | None = None,
    keep_paths: bool = False,
) -> LimitSample:
    """``size`` draws of the limit triple, reduced to its functionals.

    1. ``tau`` is the Esscher killing time, accepted with probability
       ``m(T - tau) / m(T)`` so that its law becomes ``e^{psi t} m(T - t) / B(T)``.
    2. ``W_0`` from :func:`sample_w0` with remaining time ``T - tau``.
    3. ``W_0 > 0`` passes at once; otherwise the path is drawn exactly given ``W_0``.
    4. ``Z`` is simulated under the Esscher law on ``[0, tau)`` for its pre-jump value.
    """
    if not grid.matches(model, alpha, T):
        raise ConfigError("passage grid was built for a different model, alpha or horizon")
    psi = cumulant(model, alpha)
    m_top = grid.sup_mgf(T)
    sim = esscher_model(model, alpha)

    def block(gen, b, n):
        kill = sample_tau(model, alpha, T, gen, n)
        tau = np.empty(n)
        filled = 0
        while filled < n:
            need = n - filled
            cand = sample_tau(model, alpha, T, gen, 2 * need + 16)
            m = np.array([grid.sup_mgf(T - t) for t in cand])
            keep = cand[gen.random(cand.size) * m_top < m][:need]
            tau[filled : filled + keep.size] = keep
            filled += keep.size
        s = T - tau
        w0 = np.array([sample_w0(grid, alpha, si, gen) for si in s])
        tau0 = np.zeros(n)
        over = np.where(w0 > 0, w0, np.nan)
        neg = np.flatnonzero(w0 <= 0)
        proposals = 0
        if neg.size:
            t0, o, proposals = _conditioned_paths(model, alpha, psi, -w0[neg], s[neg], gen, grid, 10_000)
            tau0[neg] = t0
            over[neg] = o
        zb = simulate_batch(sim, tau, n, gen)
        _, prejump = sup_and_value_at(zb, tau)
        return tau, w0, tau0, over, prejump, proposals, neg.size, kill

    parts = rng.map_blocks(block, size, seed, rng.TAG_TRIPLE, threads)
    cat = lambda k: np.concatenate([p[k] for p in parts]) if parts else np.empty(0)
    proposals = sum(p[5] for p in parts)
    accepted = sum(p[6] for p in parts)
    return LimitSample(cat(0), cat(1), cat(2), cat(3), cat(4), proposals, accepted, cat(7))


def sample_limit_triple(model, alpha, T, grid, stream: np.random.Generator) -> LimitTriple:
    """A single draw, seeded from ``stream``."""
    seed = int(stream.integers(0, 2**63))
    return sample_limit_triples(model, alpha, T, grid, 1, seed).triple(0)


@dataclass(frozen=True)
class ReferenceSample:
    """Ruined replicas at level ``u`` with their importance weights."""

    u: float
    T: float
    tau: np.ndarray
    overshoot: np.ndarray
    weight: np.ndarray
    replicas: int

    @property
    def hits(self) -> int:
        return self.tau.size

    @property
    def probability(self) -> float:
        return float(self.weight.sum() / self.replicas)


def conditional_mc_reference(model, alpha, u, T, replicas, seed, importance=True, threads=None) -> ReferenceSample:
    """Weighted sample of ``(overshoot, tau(u))`` given ``tau(u) < T``.

    With ``importance=True`` paths run under the Esscher law with index
    ``alpha`` and carry likelihood ratios; ``T`` may then be infinite.
    """
    tau, over, w = ruin_sample(model, u, T, replicas, seed, alpha if importance else None, threads)
    hit = w > 0
    if not hit.any():
        raise NoHitsError(f"no replica was ruined at u={u} before T={T}")
    return ReferenceSample(float(u), float(T), tau[hit], over[hit], w[hit], replicas)
