"""Acceptance matrix: each check returns report rows and an overall verdict."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .asymptotics import b_exp_time, b_laplace, b_quadrature, consistent, segerdahl, tail_ratio_diagnostic
from .conditioned import build_passage_grid, conditional_mc_reference, sample_limit_triples, tau_cdf
from .errors import FallbackWarning
from .fluctuation import (
    infinite_horizon_constant,
    overshoot_law_cramer,
    overshoot_law_infinite,
    ruin_prob_infinite,
    vigon_check,
)
from .model import (
    Exponential,
    RiskModel,
    TiltedPareto,
    cumulant,
    cumulant_derivative,
    levy_tail,
    lundberg_root,
    mean_increment,
    premium_for_cumulant,
)
from .paths import PathSample, estimate_ruin_prob, estimate_sup_mgf, first_passage, running_sup
from .stats import effective_sample_size, ks_distance, ks_two_sample

__all__ = ["Row", "CRITERIA", "run_criterion", "run_all"]


@dataclass(frozen=True)
class Row:
    criterion: str
    target: str
    observed: str
    tolerance: str
    passed: bool

    def as_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _trend_toward(values, errors, target, n_se=2.0) -> bool:
    """Distance to ``target`` never grows by more than ``n_se`` combined SE between neighbours."""
    gaps = [abs(v - target) for v in values]
    return all(
        gaps[k + 1] <= gaps[k] + n_se * math.hypot(errors[k], errors[k + 1]) for k in range(len(gaps) - 1)
    )


def _nonincreasing(values, noise, n_se=2.0) -> bool:
    return all(values[k + 1] <= values[k] + n_se * math.hypot(noise[k], noise[k + 1]) for k in range(len(values) - 1))


# configurations ---------------------------------------------------------------
EXP_BASE = RiskModel(1.0, 2.0, Exponential(1.0))
EXP_UP = RiskModel(1.0, 0.9, Exponential(1.0))
TP_121 = RiskModel(1.0, 2.0, TiltedPareto(1.0, 2.0, 1.0))
TP_131 = RiskModel(1.0, 2.0, TiltedPareto(1.0, 3.0, 1.0))
SUBORDINATOR = RiskModel(1.0, 0.0, TiltedPareto(1.0, 2.5, 1.0))


def criterion_1(seed: int) -> list[Row]:
    m, a, T = SUBORDINATOR, 1.0, 1.0
    target = T * math.exp(cumulant(m, a) * T)
    rows = []
    for est in (
        b_quadrature(m, a, T, replicas=10**6, seed=seed),
        b_exp_time(m, a, T, replicas=10**6, seed=seed),
        b_laplace(m, a, T),
    ):
        tol = max(3 * est.std_error, 0.005 * target)
        rows.append(Row(f"1:{est.method}", _fmt(target), _fmt(est.value), _fmt(tol), bool(abs(est.value - target) <= tol)))
    return rows


def criterion_2(seed: int) -> list[Row]:
    rows = []
    configs = [("psi<0", EXP_BASE, 0.25), ("psi>0", EXP_UP, 0.5), ("psi=0", EXP_BASE, 0.5)]
    for label, m, a in configs:
        for T in (1.0, 2.0, 4.0):
            q = b_quadrature(m, a, T, replicas=2 * 10**5, seed=seed)
            lp = b_laplace(m, a, T)
            ok_l = consistent(q, lp)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", FallbackWarning)
                e = b_exp_time(m, a, T, replicas=2 * 10**5, seed=seed + 1)
            fell_back = any(issubclass(w.category, FallbackWarning) for w in caught)
            if label == "psi=0":
                ok_e = fell_back and "fallback=quadrature" in e.flags
                obs = f"quad={_fmt(q.value)}±{_fmt(q.std_error)} laplace={_fmt(lp.value)} exp-time=fallback"
            else:
                ok_e = consistent(q, e)
                obs = f"quad={_fmt(q.value)}±{_fmt(q.std_error)} exp={_fmt(e.value)}±{_fmt(e.std_error)} laplace={_fmt(lp.value)}"
            rows.append(Row(f"2:{label}:T={T:g}", "methods agree", obs, "3 SE / 0.5%", ok_l and ok_e))
    return rows


def criterion_3(seed: int) -> list[Row]:
    rows = []
    for label, m, a in (("exp", EXP_BASE, 0.25), ("tpareto", TP_121, 1.0)):
        psi = cumulant(m, a)
        T = 5.0 / abs(psi)
        limit = infinite_horizon_constant(m, a)
        grid = [T / 8, T / 4, T / 2, T]
        ests = [b_quadrature(m, a, t, grid_size=65, replicas=10**5, seed=seed) for t in grid]
        final = ests[-1]
        gap = abs(final.value - limit) / limit
        mono = all(ests[k + 1].value > ests[k].value for k in range(len(ests) - 1))
        bounded = final.value <= limit + 3 * final.std_error
        rows.append(
            Row(
                f"3:{label}",
                f"B(inf)={_fmt(limit)}",
                f"B({_fmt(T)})={_fmt(final.value)} gap={gap:.3%} monotone={mono}",
                "5%",
                gap <= 0.05 and mono and bounded,
            )
        )
    return rows


def criterion_4(seed: int) -> list[Row]:
    rows = []
    for label, m, a in (("exp", EXP_BASE, 0.25), ("tpareto", TP_121, 1.0)):
        b = b_quadrature(m, a, 0.05, replicas=10**5, seed=seed)
        r = b.value / 0.05
        rows.append(Row(f"4:{label}", "1", _fmt(r), "[0.9, 1.1]", 0.9 <= r <= 1.1))
    return rows


def criterion_5(seed: int) -> list[Row]:
    m, a, T = TP_121, 1.0, 2.0
    b = b_laplace(m, a, T)
    ratios, ses = [], []
    for u in (2.0, 4.0, 6.0, 8.0):
        e = estimate_ruin_prob(m, u, T, 10**6, seed, importance=a)
        scale = levy_tail(m, u) * b.value
        ratios.append(e.estimate / scale)
        ses.append(e.std_error / scale)
    trend = _trend_toward(ratios, ses, 1.0)
    final = abs(ratios[-1] - 1.0)
    return [Row("5", "ratio -> 1", " ".join(_fmt(r) for r in ratios), "trend (2 SE); final 25%", bool(trend and final <= 0.25))]


def criterion_6(seed: int) -> list[Row]:
    m, a, T = TP_121, 1.0, 2.0
    rows = tail_ratio_diagnostic(m, a, T, [2.0, 4.0, 8.0, 16.0, 32.0], 10**6, seed)
    target = rows[0][3]
    ratios = [r[1] for r in rows]
    ses = [r[2] for r in rows]
    trend = _trend_toward(ratios, ses, target)
    final = abs(ratios[-1] - target) / target
    return [
        Row("6", f"T e^(psi T)={_fmt(target)}", " ".join(_fmt(r) for r in ratios), "trend (2 SE); final 25%", trend and final <= 0.25)
    ]


def criterion_7(seed: int) -> list[Row]:
    m, a = TP_131, 1.0
    limit = infinite_horizon_constant(m, a)
    ratios, ses = [], []
    for u in (2.0, 4.0, 8.0, 16.0, 32.0):
        e = ruin_prob_infinite(m, u, 10**6, seed)
        tail = levy_tail(m, u)
        ratios.append(e.estimate / tail)
        ses.append(e.std_error / tail)
    trend = _trend_toward(ratios, ses, limit)
    gap = abs(ratios[-1] - limit) / limit
    return [Row("7", _fmt(limit), " ".join(_fmt(r) for r in ratios), "trend (2 SE); final 25%", trend and gap <= 0.25)]


def criterion_8(seed: int) -> list[Row]:
    m, a = TP_121, 1.0
    law = overshoot_law_infinite(m, a)
    ks, noise, hits = [], [], []
    for u in (2.0, 4.0, 8.0, 16.0, 32.0):
        ref = conditional_mc_reference(m, a, u, math.inf, 4 * 10**5, seed)
        ess = effective_sample_size(ref.weight)
        ks.append(ks_distance(ref.overshoot, law.cdf, ref.weight))
        noise.append(1.0 / math.sqrt(ess))
        hits.append(ess)
    ok = ks[-1] <= 0.05 and ks[-1] < ks[0] and _nonincreasing(ks, noise)
    return [Row("8", "KS -> 0", " ".join(f"{k:.4f}" for k in ks) + f" (ess {hits[-1]:.0f})", "final 0.05; decreasing", ok)]


def criterion_9(seed: int) -> list[Row]:
    rows = []
    gammas = np.array([0.0, 0.5, 1.0, 2.0, 4.0])
    tp25 = TiltedPareto(1.0, 2.5, 1.0)
    for label, base, a in (("exp", EXP_BASE, 0.5), ("tpareto", RiskModel(1.0, 1.0, tp25), 1.0)):
        p0 = premium_for_cumulant(base, a, 0.0)
        m = base.with_premium(p0)
        law = overshoot_law_cramer(m, a)
        mass = law.mass()
        gaps = []
        for eps in (1e-2, 1e-3, 1e-4, 1e-5):
            me = base.with_premium(premium_for_cumulant(base, a, -eps))
            near = overshoot_law_infinite(me, a)
            gaps.append(float(np.max(np.abs(near.density(gammas) - law.density(gammas)))))
        ok = abs(mass - 1.0) <= 1e-4 and gaps[-1] <= 1e-3 and all(np.diff(gaps) < 0)
        rows.append(
            Row(f"9:{label}", "mass 1; gap -> 0", f"mass={mass:.10f} gaps=" + ",".join(f"{g:.2e}" for g in gaps), "1e-4; 1e-3", ok)
        )
    return rows


def criterion_10(seed: int) -> list[Row]:
    m, a, T = TP_121, 1.0, 2.0
    psi = cumulant(m, a)
    grid = build_passage_grid(m, a, T, replicas=10**5, seed=seed)
    sample = sample_limit_triples(m, a, T, grid, 10**5, seed)
    ks_tau = ks_distance(sample.killing_time, lambda t: tau_cdf(t, psi, T))
    b_top = b_laplace(m, a, T).value
    t_grid = np.linspace(T / 40, T, 40)
    b_ratio = np.array([b_laplace(m, a, t).value for t in t_grid]) / b_top
    pt = np.sort(sample.passage_time)
    gap = float(np.max(np.abs(np.searchsorted(pt, t_grid, side="right") / pt.size - b_ratio)))
    ks_o, noise = [], []
    for u in (2.0, 4.0, 8.0, 16.0, 32.0):
        ref = conditional_mc_reference(m, a, u, T, 10**6, seed + 1)
        ess = effective_sample_size(ref.weight)
        ks_o.append(ks_two_sample(sample.overshoot, ref.overshoot, None, ref.weight))
        noise.append(math.sqrt(1.0 / ess + 1.0 / len(sample)))
    ok_o = ks_o[-1] <= 0.05 and ks_o[-1] < ks_o[0] and _nonincreasing(ks_o, noise)
    return [
        Row("10:tau", "killing-time law", f"KS={ks_tau:.4f}", "0.01", ks_tau <= 0.01),
        Row("10:passage", "B(t)/B(T)", f"sup-gap={gap:.4f}", "0.02", gap <= 0.02),
        Row("10:overshoot", "KS -> 0", " ".join(f"{k:.4f}" for k in ks_o), "final 0.05; decreasing", ok_o),
    ]


def criterion_11(seed: int, perturb: float = 1.0) -> list[Row]:
    rows = []
    for label, m in (("exp", EXP_BASE), ("tpareto", TP_121)):
        gap = vigon_check(m, perturb=perturb)
        rows.append(Row(f"11:{label}", "0", f"{gap:.3e}", "1e-12", gap <= 1e-12))
    injected = vigon_check(TP_121, perturb=1.01)
    rows.append(Row("11:fault", "0.01", f"{injected:.6f}", "detected", abs(injected - 0.01) < 1e-6))
    return rows


def criterion_12(seed: int) -> list[Row]:
    rows = []
    path = PathSample(4.0, np.array([0.5, 1.5, 3.0]), np.array([2.0, 1.5, 4.0]), 1.0)
    # values right after the jumps: 1.5, 2.0, 4.5
    checks = [
        running_sup(path, 1.0) == 1.5,
        running_sup(path, 2.5) == 2.0,
        running_sup(path, 4.0) == 4.5,
        first_passage(path, 1.0).tau == 0.5,
        first_passage(path, 1.0).overshoot == 0.5,
        first_passage(path, 2.0).tau == 3.0,
        first_passage(path, 2.0).overshoot == 2.5,
        first_passage(path, 2.0).presup == 2.0,
        first_passage(path, 5.0).tau is None,
        running_sup(PathSample(2.0, np.array([1.0]), np.array([3.0]), 1.0), 2.0) == 2.0,
        first_passage(PathSample(2.0, np.empty(0), np.empty(0), -1.0), 1.0).tau == 1.0,
    ]
    rows.append(Row("12:exact", "hand values", f"{sum(checks)}/{len(checks)}", "exact", all(checks)))
    a = estimate_sup_mgf(TP_121, 1.0, 1.0, 50_000, seed, threads=1)
    b = estimate_sup_mgf(TP_121, 1.0, 1.0, 50_000, seed, threads=1)
    c = estimate_sup_mgf(TP_121, 1.0, 1.0, 50_000, seed, threads=4)
    rows.append(Row("12:rerun", "identical", f"{a.estimate!r} {b.estimate!r}", "bitwise", a == b))
    rows.append(Row("12:threads", "identical", f"{a.estimate!r} {c.estimate!r}", "bitwise", a == c))
    return rows


def criterion_13(seed: int) -> list[Row]:
    m = EXP_BASE
    nu = lundberg_root(m)
    c = -mean_increment(m) / cumulant_derivative(m, nu, 1)
    analytic = nu is not None and abs(nu - 0.5) <= 1e-10 and abs(c - 0.5) <= 1e-10
    classical = segerdahl(m, 5.0, math.inf)
    target = 0.5 * math.exp(-2.5)
    est = estimate_ruin_prob(m, 5.0, math.inf, 4 * 10**5, seed)
    ok_mc = abs(est.estimate - target) <= 3 * est.std_error
    return [
        Row("13:constants", "nu=0.5 C=0.5", f"nu={nu!r} C={c!r} CL={_fmt(classical)}", "1e-10", analytic and abs(classical - target) < 1e-12),
        Row("13:mc", _fmt(target), f"{_fmt(est.estimate)}±{_fmt(est.std_error)} {','.join(est.flags)}", "3 SE", ok_mc),
    ]


CRITERIA: dict[int, Callable[[int], list[Row]]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
    13: criterion_13,
}


def run_criterion(k: int, seed: int = 20240601, inject_fault: bool = False) -> tuple[list[Row], float]:
    start = time.perf_counter()
    if k == 11 and inject_fault:
        rows = criterion_11(seed, perturb=1.01)
    else:
        rows = CRITERIA[k](seed)
    return rows, time.perf_counter() - start


def run_all(seed: int = 20240601, only=None, inject_fault: bool = False, progress=None) -> list[Row]:
    rows: list[Row] = []
    for k in sorted(CRITERIA):
        if only and k not in only:
            continue
        got, elapsed = run_criterion(k, seed, inject_fault)
        rows.extend(got)
        if progress:
            progress(k, got, elapsed)
    return rows
