"""Claim distributions, the Cramér–Lundberg risk model and its cumulant.

The claim surplus process is ``X_t = sum_{i <= N_t} U_i - p t`` with ``N`` a
rate ``lam`` Poisson process.  Everything in this module is a pure function of
its arguments.
"""

from __future__ import annotations

import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import DomainError

__all__ = [
    "ClaimDistribution",
    "Exponential",
    "TiltedPareto",
    "EsscherTiltedPareto",
    "RiskModel",
    "Regime",
    "CumulantInfo",
    "claim_mgf",
    "cumulant",
    "cumulant_derivative",
    "cumulant_info",
    "mean_increment",
    "lundberg_root",
    "phi_inverse",
    "phi_inverse_complex",
    "esscher_model",
    "levy_tail",
    "premium_for_cumulant",
]

MGF_RTOL = 1e-10
ROOT_TOL = 1e-12


def _scaled_expint(s: float, z) -> np.ndarray:
    """Return ``exp(z) * E_s(z)`` for real order ``s > 0`` and ``z > 0``.

    ``E_s(z) = int_1^inf exp(-z t) t^{-s} dt``.  Small arguments go through the
    incomplete gamma function plus upward recurrence; large arguments use the
    continued fraction, which avoids the cancellation of the recurrence.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    small = z <= 1.0
    if np.any(small):
        zs = z[small]
        k = math.ceil(s) - 1
        s0 = s - k
        if s0 == 1.0:
            e = special.exp1(zs)
        else:
            e = zs ** (s0 - 1.0) * special.gamma(1.0 - s0) * special.gammaincc(1.0 - s0, zs)
        order = s0
        for _ in range(k):
            e = (np.exp(-zs) - zs * e) / order
            order += 1.0
        out[small] = np.exp(zs) * e
    big = ~small
    if np.any(big):
        # modified Lentz evaluation of the Legendre continued fraction
        zb = z[big]
        tiny = 1e-300
        b = zb + s
        c = np.full_like(zb, 1.0 / tiny)
        d = 1.0 / b
        h = d.copy()
        for i in range(1, 300):
            a = -i * (s - 1.0 + i)
            b = b + 2.0
            d = 1.0 / (a * d + b)
            c = b + a / c
            delta = c * d
            h *= delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        out[big] = h
    return out


class ClaimDistribution(ABC):
    """Law of a single claim size ``U > 0``."""

    @property
    @abstractmethod
    def abscissa(self) -> float:
        """Right end of the MGF domain."""

    @property
    @abstractmethod
    def abscissa_included(self) -> bool:
        """Whether the MGF is finite at the abscissa itself."""

    @abstractmethod
    def tail(self, x):
        """Survival function ``P(U > x)``."""

    @abstractmethod
    def density(self, x):
        ...

    @abstractmethod
    def _mgf(self, beta: float) -> float:
        ...

    @abstractmethod
    def _mgf_moment(self, beta: float, order: int) -> float:
        """``E[U^order e^{beta U}]``."""

    @abstractmethod
    def mgf_complex(self, beta: complex) -> complex:
        """Analytic continuation of the MGF to ``Re beta`` inside the domain."""

    @abstractmethod
    def mgf_complex_derivative(self, beta: complex) -> complex:
        ...

    @property
    @abstractmethod
    def mean(self) -> float:
        ...

    @abstractmethod
    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        ...

    @abstractmethod
    def integrated_tail(self, x):
        """Tail of the equilibrium law, ``int_x^inf P(U>y) dy / E U``."""

    def tilted_tail_integral(self, x, beta: float):
        """``int_x^inf e^{beta y} P(U > y) dy``, vectorised in ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([
            integrate.quad(lambda y: math.exp(beta * y) * float(self.tail(y)), xi, np.inf,
                           epsabs=0.0, epsrel=1e-10, limit=200)[0]
            for xi in x.ravel()
        ])
        return out.reshape(x.shape)

    def sample_integrated_tail(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """Draws from the integrated-tail law with density ``tail(x) / mean``."""
        raise NotImplementedError

    def sample_tilted_integrated_tail(self, gen: np.random.Generator, n: int, beta: float) -> np.ndarray:
        """Draws from the density proportional to ``e^{beta x} tail(x)``."""
        raise NotImplementedError

    @abstractmethod
    def tilted(self, shift: float) -> "ClaimDistribution":
        """Law proportional to ``e^{shift x} F(dx)``."""

    def in_domain(self, beta: float) -> bool:
        if beta < self.abscissa:
            return True
        return beta == self.abscissa and self.abscissa_included

    def check_domain(self, beta: float) -> None:
        if not self.in_domain(beta):
            raise DomainError(
                f"beta={beta!r} outside the MGF domain of {self!r} "
                f"(abscissa {self.abscissa!r})"
            )

    def mgf(self, beta: float) -> float:
        self.check_domain(beta)
        if beta == 0.0:
            return 1.0
        return self._mgf(beta)

    def mgf_moment(self, beta: float, order: int) -> float:
        self.check_domain(beta)
        if order == 0:
            return self.mgf(beta)
        return self._mgf_moment(beta, order)

    @property
    def spec(self) -> str:
        """Compact text form used by the CLI and digests."""
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(ClaimDistribution):
    """Exponential claims with rate ``rate``; not convolution equivalent."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"Exponential rate must be positive, got {self.rate}")

    @property
    def abscissa(self) -> float:
        return self.rate

    @property
    def abscissa_included(self) -> bool:
        return False

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, np.exp(-self.rate * np.maximum(x, 0.0)))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)))

    def _mgf(self, beta):
        return self.rate / (self.rate - beta)

    def _mgf_moment(self, beta, order):
        return math.factorial(order) * self.rate / (self.rate - beta) ** (order + 1)

    def mgf_complex(self, beta):
        return self.rate / (self.rate - beta)

    def mgf_complex_derivative(self, beta):
        return self.rate / (self.rate - beta) ** 2

    @property
    def mean(self):
        return 1.0 / self.rate

    def sample(self, gen, n):
        return gen.exponential(1.0 / self.rate, size=n)

    def integrated_tail(self, x):
        return self.tail(x)

    def sample_integrated_tail(self, gen, n):
        return self.sample(gen, n)

    def sample_tilted_integrated_tail(self, gen, n, beta):
        return gen.exponential(1.0 / (self.rate - beta), size=n)

    def tilted_tail_integral(self, x, beta):
        self.check_domain(beta)
        x = np.asarray(x, dtype=float)
        c = self.rate - beta
        return np.exp(-c * x) / c

    def tilted(self, shift):
        if shift == 0.0:
            return self
        self.check_domain(shift)
        return Exponential(self.rate - shift)

    @property
    def spec(self):
        return f"exp:{self.rate!r}"


@dataclass(frozen=True)
class TiltedPareto(ClaimDistribution):
    """Claims with tail ``(1 + x/scale)^(-theta) * exp(-alpha x)``.

    For ``theta > 1`` this law is convolution equivalent with index ``alpha``
    and its MGF is finite at ``beta = alpha``.
    """

    alpha: float
    theta: float
    scale: float = 1.0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not (self.alpha > 0 and self.theta > 1 and self.scale > 0):
            raise DomainError(
                f"TiltedPareto needs alpha > 0, theta > 1, scale > 0; got "
                f"({self.alpha}, {self.theta}, {self.scale})"
            )

    @property
    def abscissa(self):
        return self.alpha

    @property
    def abscissa_included(self):
        return True

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        return np.where(x < 0, 1.0, (1.0 + xp / self.scale) ** (-self.theta) * np.exp(-self.alpha * xp))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        y = 1.0 + xp / self.scale
        f = np.exp(-self.alpha * xp) * (
            self.alpha * y ** (-self.theta) + (self.theta / self.scale) * y ** (-self.theta - 1.0)
        )
        return np.where(x < 0, 0.0, f)

    def _tilted_density(self, x, beta):
        # e^{beta x} f(x) written without overflow at beta = alpha
        y = 1.0 + x / self.scale
        return math.exp((beta - self.alpha) * x) * (
            self.alpha * y ** (-self.theta) + (self.theta / self.scale) * y ** (-self.theta - 1.0)
        )

    def _quad(self, fn) -> float:
        knot = 10.0 * self.scale
        # the tighter-than-target request can trip roundoff warnings on slow tails
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            a, _ = integrate.quad(fn, 0.0, knot, epsabs=0.0, epsrel=MGF_RTOL * 0.1, limit=200)
            b, _ = integrate.quad(fn, knot, np.inf, epsabs=0.0, epsrel=MGF_RTOL * 0.1, limit=200)
        return a + b

    def _mgf(self, beta):
        key = ("mgf", beta)
        if key not in self._cache:
            self._cache[key] = self._quad(lambda x: self._tilted_density(x, beta))
        return self._cache[key]

    def _mgf_moment(self, beta, order):
        if beta == self.alpha and self.theta - order <= 1.0:
            return math.inf
        key = ("moment", beta, order)
        if key not in self._cache:
            self._cache[key] = self._quad(lambda x: x**order * self._tilted_density(x, beta))
        return self._cache[key]

    def _laplace_tail_integral(self, c):
        """``int_0^inf e^{-c x} (1 + x/scale)^(-theta) dx`` for complex ``Re c >= 0``."""
        s = self.scale
        if c == 0:
            return mpmath.mpf(s) / (self.theta - 1.0)
        z = c * s
        return s * mpmath.exp(z) * mpmath.expint(self.theta, z)

    def mgf_complex(self, beta):
        # M(beta) = 1 + beta * int e^{beta x} P(U > x) dx
        beta = mpmath.mpc(beta)
        return complex(1 + beta * self._laplace_tail_integral(self.alpha - beta))

    def mgf_complex_derivative(self, beta):
        beta = mpmath.mpc(beta)
        c = self.alpha - beta
        s = self.scale
        j = self._laplace_tail_integral(c)
        if c == 0:
            if self.theta <= 2.0:
                return complex(mpmath.inf)
            dj = s * s / (self.theta - 2.0)
        else:
            z = c * s
            # d/dbeta int e^{-c x}(1+x/s)^{-theta} dx = int x e^{-c x}(...) dx
            dj = s * s * mpmath.exp(z) * (mpmath.expint(self.theta - 1.0, z) - mpmath.expint(self.theta, z))
        return complex(j + beta * dj)

    @property
    def mean(self):
        key = ("mean",)
        if key not in self._cache:
            self._cache[key] = self._quad(lambda x: float(self.tail(x)))
        return self._cache[key]

    def _laplace_tail_from(self, x, c: float):
        """``int_x^inf e^{-c y} (1 + y/scale)^(-theta) dy`` for real ``c >= 0``, vectorised in x."""
        x = np.asarray(x, dtype=float)
        s, th = self.scale, self.theta
        a = 1.0 + x / s
        if c == 0.0:
            return s / (th - 1.0) * a ** (1.0 - th)
        # substitute y -> s*(t - 1): s e^{c s} a^{1-th} E_th(c s a), scaled to avoid under/overflow
        return s * a ** (1.0 - th) * np.exp(-c * x) * _scaled_expint(th, c * s * a).reshape(a.shape)

    def integrated_tail(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        return np.where(x < 0, 1.0, self._laplace_tail_from(xp, self.alpha) / self.mean)

    def sample(self, gen, n):
        return self.sample_with_stats(gen, n)[0]

    def sample_with_stats(self, gen, n, shift: float = 0.0):
        """Acceptance-rejection against ``Exponential(alpha - shift)``.

        Targets the law proportional to ``e^{shift x} f(x)`` for ``shift < alpha``;
        returns ``(draws, proposals)``.  The envelope uses
        ``f(x) <= (alpha + theta/scale) e^{-alpha x}``.
        """
        rate = self.alpha - shift
        bound = self.alpha + self.theta / self.scale
        out = np.empty(n)
        filled = 0
        proposals = 0
        accept_guess = max(rate * self.mgf(shift) / bound, 1e-3) if shift else rate / bound
        while filled < n:
            need = n - filled
            m = int(need / accept_guess * 1.1) + 16
            x = gen.exponential(1.0 / rate, size=m)
            v = gen.random(m)
            y = 1.0 + x / self.scale
            ratio = (self.alpha * y ** (-self.theta) + (self.theta / self.scale) * y ** (-self.theta - 1.0)) / bound
            acc = np.flatnonzero(v < ratio)
            if acc.size >= need:
                # count proposals only up to the last one consumed
                acc = acc[:need]
                proposals += int(acc[-1]) + 1
            else:
                proposals += m
            out[filled : filled + acc.size] = x[acc]
            filled += acc.size
        return out, proposals

    def tilted_tail_integral(self, x, beta):
        self.check_domain(beta)
        if self.alpha - beta == 0.0 and self.theta <= 1.0:
            return np.full(np.shape(x), np.inf)
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return self._laplace_tail_from(x, self.alpha - beta)

    def sample_integrated_tail(self, gen, n):
        """Draws from the density ``tail(x) / mean``.

        The tail is bounded by ``e^{-alpha x}``, so propose ``Exponential(alpha)``
        and accept with probability ``(1 + x/scale)^(-theta)``.
        """
        out = np.empty(n)
        filled = 0
        rate_guess = max(self.alpha * self.mean, 1e-3)
        while filled < n:
            need = n - filled
            m = int(need / rate_guess * 1.1) + 16
            x = gen.exponential(1.0 / self.alpha, size=m)
            keep = x[gen.random(m) < (1.0 + x / self.scale) ** (-self.theta)][:need]
            out[filled : filled + keep.size] = keep
            filled += keep.size
        return out

    def sample_tilted_integrated_tail(self, gen, n, beta):
        """Draws from the density proportional to ``e^{beta x} tail(x)``.

        That density is ``Lomax(theta - 1, scale)`` damped by
        ``e^{-(alpha - beta) x}``; at ``beta = alpha`` the Lomax draw is exact.
        """
        self.check_domain(beta)
        c = self.alpha - beta
        shape = self.theta - 1.0

        def lomax(m):
            return self.scale * np.expm1(-np.log1p(-gen.random(m)) / shape)

        if c == 0.0:
            return lomax(n)
        out = np.empty(n)
        filled = 0
        while filled < n:
            need = n - filled
            x = lomax(2 * need + 16)
            keep = x[gen.random(x.size) < np.exp(-c * x)][:need]
            out[filled : filled + keep.size] = keep
            filled += keep.size
        return out

    def tilted(self, shift):
        if shift == 0.0:
            return self
        self.check_domain(shift)
        return EsscherTiltedPareto(self, shift)

    @property
    def spec(self):
        return f"tpareto:{self.alpha!r},{self.theta!r},{self.scale!r}"


@dataclass(frozen=True)
class EsscherTiltedPareto(ClaimDistribution):
    """Claim law ``e^{shift x} F(dx) / M(shift)`` for a :class:`TiltedPareto` base.

    At ``shift == base.alpha`` the law is the mixture, with weights
    proportional to ``alpha*scale/(theta-1)`` and ``1``, of Lomax laws with
    shapes ``theta - 1`` and ``theta``; it is then sampled exactly.  For
    smaller shifts it is sampled by acceptance-rejection.
    """

    base: TiltedPareto
    shift: float

    @property
    def at_index(self) -> bool:
        return self.shift == self.base.alpha

    @property
    def norm(self) -> float:
        return self.base.mgf(self.shift)

    @property
    def abscissa(self):
        return self.base.alpha - self.shift

    @property
    def abscissa_included(self):
        return True

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(self.shift * np.maximum(x, 0.0)) * self.base.density(x) / self.norm

    def tail(self, x):
        # integrate by parts: int_x^inf e^{s y} f(y) dy = e^{s x} Fbar(x) + s int_x^inf e^{s y} Fbar(y) dy
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        b = self.base
        c = b.alpha - self.shift
        head = (1.0 + xp / b.scale) ** (-b.theta) * np.exp(-c * xp)
        rest = self.shift * b._laplace_tail_from(xp, c)
        return np.where(x < 0, 1.0, (head + rest) / self.norm)

    def _mgf(self, beta):
        return self.base.mgf(beta + self.shift) / self.norm

    def _mgf_moment(self, beta, order):
        return self.base.mgf_moment(beta + self.shift, order) / self.norm

    def mgf_complex(self, beta):
        return self.base.mgf_complex(beta + self.shift) / self.norm

    def mgf_complex_derivative(self, beta):
        return self.base.mgf_complex_derivative(beta + self.shift) / self.norm

    @property
    def mean(self):
        return self.base.mgf_moment(self.shift, 1) / self.norm

    def integrated_tail(self, x):
        raise NotImplementedError("integrated tail of a tilted law is not needed")

    def sample_integrated_tail(self, gen, n):
        raise NotImplementedError("integrated tail of a tilted law is not needed")

    def lomax_weights(self) -> tuple[float, float]:
        b = self.base
        w1 = b.alpha * b.scale / (b.theta - 1.0)
        return w1 / (w1 + 1.0), 1.0 / (w1 + 1.0)

    def sample(self, gen, n):
        if not self.at_index:
            return self.base.sample_with_stats(gen, n, shift=self.shift)[0]
        b = self.base
        w_heavy, _ = self.lomax_weights()
        heavy = gen.random(n) < w_heavy
        shape = np.where(heavy, b.theta - 1.0, b.theta)
        u = gen.random(n)
        # Lomax(shape, scale) by inversion; 1 - u keeps the argument in (0, 1]
        return b.scale * np.expm1(-np.log1p(-u) / shape)

    def tilted(self, shift):
        if shift == 0.0:
            return self
        return self.base.tilted(self.shift + shift)

    @property
    def spec(self):
        return f"esscher({self.base.spec};{self.shift!r})"


@dataclass(frozen=True)
class RiskModel:
    """Claim arrival rate ``lam``, premium rate ``premium`` and claim law."""

    lam: float
    premium: float
    claims: ClaimDistribution

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"claim arrival rate must be positive, got {self.lam}")

    @property
    def spec(self) -> str:
        return f"lam={self.lam!r};p={self.premium!r};claims={self.claims.spec}"

    def with_premium(self, premium: float) -> "RiskModel":
        return RiskModel(self.lam, premium, self.claims)


class Regime(str, Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class CumulantInfo:
    alpha: float
    psi: float
    regime: Regime
    lundberg_root: float | None
    abscissa: float


def claim_mgf(dist: ClaimDistribution, beta: float) -> float:
    return dist.mgf(beta)


def cumulant(model: RiskModel, beta: float) -> float:
    """``psi(beta) = ln E e^{beta X_1} = lam (M_U(beta) - 1) - p beta``."""
    return model.lam * (model.claims.mgf(beta) - 1.0) - model.premium * beta


def cumulant_derivative(model: RiskModel, beta: float, order: int = 1) -> float:
    if order == 0:
        return cumulant(model, beta)
    d = model.lam * model.claims.mgf_moment(beta, order)
    if order == 1:
        d -= model.premium
    return d


def cumulant_complex(model: RiskModel, beta: complex) -> complex:
    return model.lam * (model.claims.mgf_complex(beta) - 1.0) - model.premium * beta


def mean_increment(model: RiskModel) -> float:
    """``E X_1 = lam * mu_F - p``."""
    return model.lam * model.claims.mean - model.premium


def _regime(psi: float, tol: float = 1e-10) -> Regime:
    if abs(psi) <= tol:
        return Regime.CRITICAL
    return Regime.SUBCRITICAL if psi < 0 else Regime.SUPERCRITICAL


def cumulant_info(model: RiskModel, alpha: float) -> CumulantInfo:
    psi = cumulant(model, alpha)
    return CumulantInfo(alpha, psi, _regime(psi), lundberg_root(model), model.claims.abscissa)


def lundberg_root(model: RiskModel) -> float | None:
    """Positive root of ``psi``, or ``None`` when it does not exist.

    ``psi`` is convex with ``psi(0) = 0``, so on ``(0, abscissa]`` it is
    negative before the root and positive after it; bisection on the sign is
    therefore safe.
    """
    claims = model.claims
    if mean_increment(model) >= 0:
        return None
    top = claims.abscissa
    if claims.abscissa_included:
        psi_top = cumulant(model, top)
        if psi_top < 0:
            return None
        if psi_top == 0:
            return top
        hi = top
    else:
        hi = None
        for k in range(1, 60):
            b = top * (1.0 - 2.0**-k)
            if cumulant(model, b) > 0:
                hi = b
                break
        if hi is None:
            return None
    lo = 0.0
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if cumulant(model, mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _require_drift_down(model: RiskModel) -> None:
    if not model.premium > 0:
        raise DomainError(
            f"phi needs a spectrally positive model with premium > 0, got p={model.premium}"
        )


def phi_inverse(model: RiskModel, delta: float) -> float:
    """Smallest root on ``(-inf, 0]`` of ``psi(beta) = delta`` for ``delta >= 0``.

    This is the inverse of ``psi`` restricted to its decreasing branch on the
    negative half line.  Safeguarded Newton with a bisection bracket.
    """
    _require_drift_down(model)
    if delta < 0:
        raise DomainError(f"phi is defined for delta >= 0, got {delta}")

    def f(b):
        return cumulant(model, b) - delta

    def fp(b):
        return cumulant_derivative(model, b, 1)

    # right end of the decreasing branch
    if fp(0.0) <= 0:
        right = 0.0
    else:
        a, b = -1.0, 0.0
        while fp(a) > 0:
            a *= 2.0
        for _ in range(200):
            m = 0.5 * (a + b)
            if fp(m) > 0:
                b = m
            else:
                a = m
            if b - a < 1e-14 * max(1.0, abs(a)):
                break
        right = a
    if f(right) == 0.0:
        return right
    left = min(-1.0, 2.0 * right)
    while f(left) <= 0:
        left *= 2.0
    lo, hi = left, right  # f(lo) > 0 >= f(hi)
    x = lo
    best, best_res = x, math.inf
    for _ in range(200):
        fx = f(x)
        if abs(fx) < best_res:
            best, best_res = x, abs(fx)
        if best_res <= 0.1 * ROOT_TOL or hi - lo <= 1e-15 * max(1.0, abs(x)):
            break
        if fx > 0:
            lo = x
        else:
            hi = x
        d = fp(x)
        x_new = x - fx / d if d < 0 else 0.5 * (lo + hi)
        if not (lo <= x_new <= hi) or x_new == x:
            x_new = 0.5 * (lo + hi)
        x = x_new
    return best


def phi_inverse_complex(model: RiskModel, delta: complex, start: complex | None = None) -> complex:
    """Root with negative real part of ``psi(beta) = delta`` for ``Re delta > 0``.

    Newton iteration in the complex plane started from ``start`` (or from the
    real root at ``Re delta``).  For exponential claims the root is the
    negative-real-part solution of a quadratic and is returned in closed form.
    """
    _require_drift_down(model)
    claims = model.claims
    lam, p = model.lam, model.premium
    if isinstance(claims, Exponential):
        eta = claims.rate
        # p b^2 + (lam - p eta + delta) b - delta eta = 0
        bq = lam - p * eta + delta
        disc = np.sqrt(complex(bq * bq + 4.0 * p * delta * eta))
        r1 = (-bq + disc) / (2.0 * p)
        r2 = (-bq - disc) / (2.0 * p)
        return r1 if r1.real < r2.real else r2
    x = complex(phi_inverse(model, max(delta.real, 0.0))) if start is None else complex(start)
    for _ in range(100):
        fx = cumulant_complex(model, x) - delta
        dx = lam * claims.mgf_complex_derivative(x) - p
        step = fx / dx
        x_new = x - step
        while x_new.real >= 0:
            step *= 0.5
            x_new = x - step
        x = x_new
        if abs(step) <= 1e-14 * max(1.0, abs(x)):
            break
    return x


def esscher_model(model: RiskModel, alpha: float) -> RiskModel:
    """Esscher transform of the model by ``alpha``.

    Jump rate becomes ``lam * M_U(alpha)`` and claims are tilted by
    ``e^{alpha x}``; the premium is unchanged.
    """
    if alpha == 0.0:
        return model
    claims = model.claims
    claims.check_domain(alpha)
    return RiskModel(model.lam * claims.mgf(alpha), model.premium, claims.tilted(alpha))


def levy_tail(model: RiskModel, u: float) -> float:
    """``Pi_X^+(u, inf) = lam * P(U > u)``."""
    return float(model.lam * model.claims.tail(u))


def premium_for_cumulant(model: RiskModel, alpha: float, target: float = 0.0) -> float:
    """Premium rate ``p`` with ``psi(alpha; p) = target`` (``psi`` is affine in ``p``)."""
    return (model.lam * (model.claims.mgf(alpha) - 1.0) - target) / alpha
