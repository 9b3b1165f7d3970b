"""Command-line front end: ``levy-ruin {psi,estimate-b,ruin,conditioned,validate}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import warnings
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import asymptotics, conditioned, rng, validation
from .errors import BudgetError, ConfigError, DomainError, NoHitsError, RegimeError
from .fluctuation import infinite_horizon_constant, ruin_prob_infinite
from .model import (
    Exponential,
    RiskModel,
    TiltedPareto,
    cumulant,
    cumulant_info,
    levy_tail,
    lundberg_root,
    mean_increment,
    phi_inverse,
)
from .paths import estimate_ruin_prob
from .stats import ks_distance, ks_two_sample

log = logging.getLogger("levy_ruin")

EXIT_OK, EXIT_DOMAIN, EXIT_BUDGET, EXIT_VALIDATION = 0, 2, 3, 4
B_METHODS = ("quadrature", "exp-time", "laplace")


# configuration ----------------------------------------------------------------
def parse_claims(text: str):
    family, _, params = text.partition(":")
    try:
        values = [float(v) for v in params.split(",")] if params else []
    except ValueError:
        raise ConfigError(f"cannot parse claim parameters in {text!r}") from None
    if family == "exp" and len(values) == 1:
        return Exponential(values[0])
    if family == "tpareto" and len(values) == 3:
        return TiltedPareto(*values)
    raise ConfigError(f"claims must be 'exp:rate' or 'tpareto:alpha,theta,scale', got {text!r}")


def parse_grid(text: str) -> list[float]:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def read_config(path: str | None) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, keys use flag spelling."""
    if not path:
        return {}
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key = value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


_FLOAT_KEYS = {"lam", "premium", "alpha", "horizon", "level"}
_INT_KEYS = {"replicas", "seed", "threads", "samples", "grid_replicas", "reference_replicas"}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill flags left unset from the config file, then defaults."""
    cfg = read_config(args.config)
    aliases = {"lambda": "lam"}
    for key, value in cfg.items():
        key = aliases.get(key, key)
        if not hasattr(args, key) or getattr(args, key) is not None:
            continue
        if key in _FLOAT_KEYS:
            value = float(value)
        elif key in _INT_KEYS:
            value = int(value)
        setattr(args, key, value)
    seed_default = 20240601 if args.command == "validate" else 0
    for key, default in (("lam", 1.0), ("seed", seed_default), ("replicas", 10**5)):
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, default)
    if getattr(args, "claims", None) is None and args.command != "validate":
        raise ConfigError("--claims is required")
    if args.command != "validate" and args.premium is None:
        raise ConfigError("--premium is required")
    return args


def build_model(args) -> RiskModel:
    return RiskModel(float(args.lam), float(args.premium), parse_claims(args.claims))


def pick_alpha(args, model: RiskModel) -> float:
    if args.alpha is not None:
        return float(args.alpha)
    if isinstance(model.claims, TiltedPareto):
        return model.claims.alpha
    raise ConfigError("--alpha is required for exponential claims")


def levels(args) -> list[float]:
    if getattr(args, "level_grid", None):
        return parse_grid(args.level_grid)
    if getattr(args, "level", None) is not None:
        return [float(args.level)]
    raise ConfigError("--level or --level-grid is required")


def horizon(args) -> float:
    if args.horizon is None:
        raise ConfigError("--horizon is required")
    return float(args.horizon)


# output -----------------------------------------------------------------------
def num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


class Table:
    """CSV writer with a fixed header and an optional JSON-lines mirror."""

    def __init__(self, header: Sequence[str], out: str | None, jsonl: str | None):
        self.header = list(header)
        self.rows: list[list] = []
        self.out = out
        self.jsonl = jsonl

    def add(self, *values) -> None:
        self.rows.append(list(values))

    def text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([num(v) for v in r])
        return buf.getvalue()

    def flush(self) -> None:
        body = self.text()
        if self.out:
            Path(self.out).write_text(body)
        else:
            sys.stdout.write(body)
        if self.jsonl:
            with open(self.jsonl, "w") as fh:
                for r in self.rows:
                    fh.write(json.dumps({k: _jsonable(v) for k, v in zip(self.header, r)}) + "\n")


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


# commands ---------------------------------------------------------------------
def cmd_psi(args) -> int:
    model = build_model(args)
    betas = parse_grid(args.beta) if args.beta else [0.0]
    table = Table(["beta", "psi", "regime"], args.out, args.jsonl)
    for b in betas:
        info = cumulant_info(model, b)
        table.add(b, info.psi, info.regime.value)
    table.flush()
    nu = lundberg_root(model)
    log.info("lundberg root: %s", "absent" if nu is None else repr(nu))
    if mean_increment(model) < 0:
        for d in (0.5, 1.0, 2.0):
            log.info("phi(%g) = %r", d, phi_inverse(model, d))
    return EXIT_OK


def _b_estimates(model, alpha, T, methods, args):
    out = []
    for m in methods:
        if m == "quadrature":
            out.append(asymptotics.b_quadrature(model, alpha, T, replicas=args.replicas, seed=args.seed, threads=args.threads))
        elif m == "exp-time":
            out.append(asymptotics.b_exp_time(model, alpha, T, replicas=args.replicas, seed=args.seed, threads=args.threads))
        elif m == "laplace":
            out.append(asymptotics.b_laplace(model, alpha, T))
        else:
            raise ConfigError(f"unknown B method {m!r}; choose from {', '.join(B_METHODS)}")
    return out


def cmd_estimate_b(args) -> int:
    model = build_model(args)
    alpha = pick_alpha(args, model)
    T = horizon(args)
    methods = parse_methods(args.method, B_METHODS)
    ests = _b_estimates(model, alpha, T, methods, args)
    agree = all(asymptotics.consistent(a, b) for a in ests for b in ests)
    table = Table(["method", "T", "alpha", "value", "std_error", "seed", "consistent"], args.out, args.jsonl)
    for e in ests:
        table.add(e.method, T, alpha, e.value, e.std_error, e.seed if e.method != "laplace" else "", agree)
    table.flush()
    return EXIT_OK


def parse_methods(text: str | None, allowed: Iterable[str]) -> list[str]:
    allowed = list(allowed)
    if not text or text == "all":
        return allowed
    chosen = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in chosen if m not in allowed]
    if bad:
        raise ConfigError(f"unknown method(s) {bad}; choose from {allowed}")
    return chosen


def cmd_ruin(args) -> int:
    model = build_model(args)
    T = horizon(args)
    claims = model.claims
    ce_ok = isinstance(claims, TiltedPareto) and claims.theta > 1
    alpha = pick_alpha(args, model) if ce_ok or args.alpha is not None else None
    nu = lundberg_root(model)
    b = None
    ce_reason = ""
    if not ce_ok:
        ce_reason = "claims not in S(alpha): asymptotic not justified"
    elif math.isinf(T):
        psi = cumulant(model, alpha)
        if psi >= 0:
            ce_reason = "psi(alpha) >= 0: infinite-horizon constant infinite"
    else:
        b = asymptotics.b_laplace(model, alpha, T)

    method = args.method or "auto"
    if method not in ("auto", "importance", "direct"):
        raise ConfigError(f"ruin --method must be auto, importance or direct, got {method!r}")
    tilt = None
    if method in ("auto", "importance"):
        if ce_ok:
            tilt = alpha
        elif nu is not None:
            tilt = nu
        elif method == "importance":
            raise RegimeError("no tilt available: claims are light-tailed without a Lundberg root")

    header = [
        "u", "T", "mc", "mc_std_error", "mc_method", "ce_approx", "ratio", "segerdahl",
        "cramer_lundberg", "reasons",
    ]
    table = Table(header, args.out, args.jsonl)
    for u in levels(args):
        reasons = []
        if math.isinf(T) and isinstance(claims, TiltedPareto) and method != "direct":
            est = ruin_prob_infinite(model, u, args.replicas, args.seed, threads=args.threads)
        elif math.isinf(T) and tilt is None:
            est = estimate_ruin_prob(model, u, T, args.replicas, args.seed, None, args.threads)
        else:
            try:
                est = estimate_ruin_prob(model, u, T, args.replicas, args.seed, tilt, args.threads)
            except ConfigError:
                est = estimate_ruin_prob(model, u, T, args.replicas, args.seed, None, args.threads)
        reasons.extend(f for f in est.flags)
        ce = None
        if ce_ok and not ce_reason:
            if math.isinf(T):
                ce = levy_tail(model, u) * infinite_horizon_constant(model, alpha)
            else:
                ce = levy_tail(model, u) * b.value
        elif ce_reason:
            reasons.append(f"ce: {ce_reason}")
        ratio = est.estimate / ce if ce else None
        seg = asymptotics.segerdahl(model, u, T)
        cl = asymptotics.segerdahl(model, u, math.inf)
        if seg is None:
            reasons.append("segerdahl: no Lundberg root")
        if cl is None:
            reasons.append("cramer_lundberg: no Lundberg root")
        table.add(u, T, est.estimate, est.std_error, est.method, ce, ratio, seg, cl, "; ".join(reasons))
    table.flush()
    return EXIT_OK


def _load_or_build_grid(model, alpha, T, args):
    path = args.grid_cache
    if path and Path(path).exists():
        grid = conditioned.PassageGrid.load(path)
        if grid.matches(model, alpha, T):
            log.warning("reusing passage grid from %s; grid build skipped", path)
            return grid
        log.warning("passage grid in %s does not match this model; rebuilding", path)
    log.warning("building passage grid")
    grid = conditioned.build_passage_grid(
        model, alpha, T, replicas=args.grid_replicas or 10**5, seed=args.seed, threads=args.threads
    )
    if path:
        grid.save(path)
        log.warning("passage grid written to %s", path)
    return grid


def cmd_conditioned(args) -> int:
    model = build_model(args)
    alpha = pick_alpha(args, model)
    T = horizon(args)
    psi = cumulant(model, alpha)
    grid = _load_or_build_grid(model, alpha, T, args)
    sample = conditioned.sample_limit_triples(model, alpha, T, grid, args.samples or 10**4, args.seed, args.threads)
    table = Table(["tau", "tau0", "overshoot", "prejump", "w0"], args.out, args.jsonl)
    for i in range(len(sample)):
        table.add(sample.tau[i], sample.tau0[i], sample.overshoot[i], sample.prejump[i], sample.w0[i])
    table.flush()

    b_top = asymptotics.b_laplace(model, alpha, T).value
    t_grid = np.linspace(T / 10, T, 10)
    b_ratio = np.array([asymptotics.b_laplace(model, alpha, t).value for t in t_grid]) / b_top
    pt = np.sort(sample.passage_time)
    ks_time = float(np.max(np.abs(np.searchsorted(pt, t_grid, side="right") / pt.size - b_ratio)))
    ks_tau = ks_distance(sample.killing_time, lambda t: conditioned.tau_cdf(t, psi, T))
    u = float(args.level) if args.level is not None else 16.0
    summary = Table(["statistic", "value"], args.summary, None)
    summary.add("ks_time_vs_B_ratio", ks_time)
    summary.add("ks_tau_vs_killing_law", ks_tau)
    try:
        ref = conditioned.conditional_mc_reference(
            model, alpha, u, T, args.reference_replicas or 10**5, args.seed + 1, threads=args.threads
        )
        summary.add("ks_overshoot_vs_reference", ks_two_sample(sample.overshoot, ref.overshoot, None, ref.weight))
        summary.add("reference_level", u)
    except NoHitsError:
        summary.add("ks_overshoot_vs_reference", None)
        summary.add("reference_level", u)
    summary.add("path_acceptance_rate", sample.acceptance_rate)
    if args.summary or args.out:
        summary.flush()
    else:
        sys.stderr.write(summary.text())
    return EXIT_OK


def cmd_validate(args) -> int:
    only = {int(k) for k in parse_grid(args.only)} if args.only else None

    def progress(k, rows, elapsed):
        verdict = "PASS" if all(r.passed for r in rows) else "FAIL"
        log.warning("criterion %d: %s (%.1fs)", k, verdict, elapsed)

    rows = validation.run_all(args.seed, only, args.inject_fault, progress)
    table = Table(["criterion", "target", "observed", "tolerance", "pass"], args.out, args.jsonl)
    for r in rows:
        table.add(r.criterion, r.target, r.observed, r.tolerance, r.passed)
    table.flush()
    ok = all(r.passed for r in rows)
    if args.report:
        report = {"all_pass": ok, "rows": [r.as_dict() for r in rows]}
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_VALIDATION


COMMANDS = {
    "psi": cmd_psi,
    "estimate-b": cmd_estimate_b,
    "ruin": cmd_ruin,
    "conditioned": cmd_conditioned,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; explicit flags win")
    common.add_argument("--claims", help="exp:RATE or tpareto:ALPHA,THETA,SCALE")
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--premium", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--horizon", type=float, help="T; 'inf' for the infinite horizon")
    common.add_argument("--level", type=float)
    common.add_argument("--level-grid", help="comma separated list of levels")
    common.add_argument("--replicas", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--method")
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="CSV destination (default stdout)")
    common.add_argument("--jsonl", help="line-delimited JSON mirror of the table")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="levy-ruin", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("psi", parents=[common], help="cumulant table")
    p.add_argument("--beta", help="comma separated list of beta values")
    sub.add_parser("estimate-b", parents=[common], help="B(T) by one or more methods")
    sub.add_parser("ruin", parents=[common], help="ruin probabilities against approximations")
    p = sub.add_parser("conditioned", parents=[common], help="limit triples of the conditioned passage")
    p.add_argument("--grid-cache", help="passage grid file, reused when it matches")
    p.add_argument("--grid-replicas", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--reference-replicas", type=int)
    p.add_argument("--summary", help="CSV destination for the summary block")
    p = sub.add_parser("validate", parents=[common], help="acceptance matrix")
    p.add_argument("--only", help="comma separated criterion numbers")
    p.add_argument("--report", help="JSON report destination")
    p.add_argument("--inject-fault", action="store_true", help="perturb the ladder envelope by 1%%")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="[levy-ruin] %(message)s",
        stream=sys.stderr,
    )
    try:
        args = resolve(args)
        if args.threads:
            rng.set_default_threads(args.threads)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except (DomainError, RegimeError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (BudgetError, NoHitsError) as exc:
        print(f"budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
