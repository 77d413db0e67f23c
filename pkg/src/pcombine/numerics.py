"""Distribution evaluators and the quadrature / root-finding core.

Everything here is a pure function of its inputs.  The stable law is only
needed at tail index 1, where the characteristic function is

    chi(t) = exp{ i*delta*t - gamma*|t| * (1 + i*beta*sign(t)*(2/pi)*ln|t|) }

(the Samorodnitsky-Taqqu "1-parameterisation").  The CDF is obtained by
Gil-Pelaez inversion of ``chi``; quantiles by bracketed root finding on the
CDF.
"""

from __future__ import annotations

import enum
import functools
import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericalError, SolverError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "RootBracket",
    "StableLaw",
    "TailLaw",
    "S0",
    "HMP_LIMIT",
    "stable_cdf",
    "stable_quantile",
    "delta_shift",
    "cms_stable_sample",
    "find_root",
    "ecdf_sup_distance",
]

_TWO_OVER_PI = 2.0 / math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for adaptive quadrature and the solvers built on it."""

    epsabs: float = 1e-10
    epsrel: float = 1e-10
    limit: int = 200

    def __post_init__(self):
        if not (self.epsabs > 0 and self.epsrel > 0):
            raise DomainError("quadrature tolerances must be positive")
        if int(self.limit) < 1:
            raise DomainError("max subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise DomainError(f"invalid bracket [{self.lo}, {self.hi}]: need finite lo < hi")


def find_root(f, bracket: RootBracket, tol: float = 1e-12) -> float:
    """Brent's method on a sign-changing bracket.

    An exact zero at either endpoint is returned as is.
    """
    if not isinstance(bracket, RootBracket):
        bracket = RootBracket(*bracket)
    if not tol > 0:
        raise DomainError("tol must be positive")
    flo, fhi = f(bracket.lo), f(bracket.hi)
    if flo == 0:
        return float(bracket.lo)
    if fhi == 0:
        return float(bracket.hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
        raise DomainError(
            f"f does not change sign on [{bracket.lo}, {bracket.hi}] (f = {flo}, {fhi})"
        )
    try:
        root, info = optimize.brentq(
            f, bracket.lo, bracket.hi, xtol=tol, rtol=4 * np.finfo(float).eps,
            maxiter=500, full_output=True,
        )
    except RuntimeError as exc:  # pragma: no cover - brentq raises on maxiter
        raise SolverError(str(exc)) from exc
    if not info.converged:  # pragma: no cover
        raise SolverError(f"Brent iteration did not converge: {info.flag}")
    return float(root)


# ---------------------------------------------------------------------------
# Tail laws of the transformed p-values


class TailLaw(enum.Enum):
    """Null law of a single transformed p-value.

    ``STANDARD_CAUCHY`` is tan{(0.5 - p)pi}, ``HALF_CAUCHY`` is
    tan{(0.5 - p/2)pi} and ``PARETO_UNIT`` is 1/p, each for p ~ U(0, 1).
    """

    STANDARD_CAUCHY = "standard_cauchy"
    HALF_CAUCHY = "half_cauchy"
    PARETO_UNIT = "pareto_unit"

    @property
    def support_lower(self) -> float:
        return {"standard_cauchy": -math.inf, "half_cauchy": 0.0, "pareto_unit": 1.0}[self.value]

    @property
    def tail_constant(self) -> float:
        """c such that 1 - F(x) ~ c / x."""
        return {"standard_cauchy": 1 / math.pi, "half_cauchy": _TWO_OVER_PI, "pareto_unit": 1.0}[
            self.value
        ]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self is TailLaw.STANDARD_CAUCHY:
            return 0.5 + np.arctan(x) / math.pi
        if self is TailLaw.HALF_CAUCHY:
            return np.where(x > 0, _TWO_OVER_PI * np.arctan(np.maximum(x, 0.0)), 0.0)
        return np.where(x > 1, 1.0 - 1.0 / np.maximum(x, 1.0), 0.0)

    def sf(self, x):
        """Survival function, accurate far into the right tail."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            if self is TailLaw.STANDARD_CAUCHY:
                return np.where(x > 0, np.arctan(1.0 / x) / math.pi, 0.5 - np.arctan(x) / math.pi)
            if self is TailLaw.HALF_CAUCHY:
                return np.where(x > 0, _TWO_OVER_PI * np.arctan(1.0 / np.maximum(x, 0.0)), 1.0)
            return np.where(x > 1, 1.0 / np.maximum(x, 1.0), 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self is TailLaw.STANDARD_CAUCHY:
            return 1.0 / (math.pi * (1.0 + x * x))
        if self is TailLaw.HALF_CAUCHY:
            return np.where(x >= 0, _TWO_OVER_PI / (1.0 + x * x), 0.0)
        return np.where(x >= 1, 1.0 / np.maximum(x, 1.0) ** 2, 0.0)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if self is TailLaw.STANDARD_CAUCHY:
            return np.tan(math.pi * (u - 0.5))
        if self is TailLaw.HALF_CAUCHY:
            return np.tan(0.5 * math.pi * u)
        with np.errstate(divide="ignore"):
            return 1.0 / (1.0 - u)

    def isf(self, q):
        """Upper quantile: x with sf(x) = q, without forming 1 - q."""
        q = np.asarray(q, dtype=float)
        with np.errstate(divide="ignore"):
            if self is TailLaw.STANDARD_CAUCHY:
                return 1.0 / np.tan(math.pi * q)
            if self is TailLaw.HALF_CAUCHY:
                return 1.0 / np.tan(0.5 * math.pi * q)
            return 1.0 / q

    def gclt_scale(self, K: float) -> float:
        """Finite-K normaliser c_K with K * P(W > c_K) = 2/pi.

        This is the exact normaliser of the generalized central limit theorem
        for index-1 tails: (W_1 + ... + W_K - c_K * Delta(c_K)) / c_K converges to
        S(1, 1, 1, 0).  It equals tan(pi/2 - 1/K) for the half-Cauchy law and
        pi*K/2 for the unit Pareto law.
        """
        if not K > 0:
            raise DomainError("K must be positive")
        return float(self.isf(_TWO_OVER_PI / K))


# ---------------------------------------------------------------------------
# Stable laws with tail index one


@dataclass(frozen=True)
class StableLaw:
    """Stable law S(1, beta, gamma, delta)."""

    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if self.alpha != 1:
            raise DomainError("only tail index alpha == 1 is supported")
        if not -1 <= self.beta <= 1:
            raise DomainError("beta must lie in [-1, 1]")
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not np.isfinite(self.delta):
            raise DomainError("delta must be finite")

    def characteristic(self, t):
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_t = np.where(at > 0, np.log(np.where(at > 0, at, 1.0)), 0.0)
        expo = 1j * self.delta * t - self.gamma * at * (
            1 + 1j * self.beta * np.sign(t) * _TWO_OVER_PI * log_t
        )
        return np.exp(expo)

    def cdf(self, x, spec: QuadratureSpec = DEFAULT_QUADRATURE):
        return stable_cdf(self, x, spec)

    def quantile(self, u, spec: QuadratureSpec = DEFAULT_QUADRATURE):
        return stable_quantile(self, u, spec)

    def sample(self, rng, n):
        return cms_stable_sample(self, rng, n)


S0 = StableLaw(1.0, 1.0, 1.0, 0.0)
HMP_LIMIT = StableLaw(1.0, 1.0, math.pi / 2, 0.0)


def _quad_checked(func, a, b, spec, **kw):
    """scipy.integrate.quad with failures turned into NumericalError."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, abserr = integrate.quad(
            func, a, b, epsabs=spec.epsabs, epsrel=spec.epsrel, limit=spec.limit, **kw
        )[:2]
    budget = max(spec.epsabs, spec.epsrel * abs(value))
    if not np.isfinite(value) or (caught and abserr > 1e3 * budget):
        raise NumericalError(
            f"quadrature did not converge (estimate {abserr:.3g}, value {value:.6g})",
            estimate=abserr,
        )
    return value, abserr


def _stable_cdf_scalar(law: StableLaw, x: float, spec: QuadratureSpec) -> float:
    # Gil-Pelaez: F(x) = 1/2 + (1/pi) int_0^inf e^{-g t} sin(t*x' + c t ln t) / t dt
    # with x' = x - delta and c = 2*beta*gamma/pi.  Splitting the sine, the
    # pure Cauchy part integrates to arctan(x'/g).  The sin(phase)/t factor
    # behaves like c ln t near zero; that piece has a closed-form Laplace
    # transform, so only the smooth remainder goes to QUADPACK's Fourier
    # routine.  Without the subtraction the far tail (|x'| > 1e6) loses half
    # its mass.
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    g = law.gamma
    xp = x - law.delta
    total = math.atan(xp / g)
    c = _TWO_OVER_PI * law.beta * g
    if c != 0.0:

        def cos_part(t):
            if t == 0.0:
                return 0.0
            s = math.sin(0.5 * c * t * math.log(t))
            return -2.0 * math.exp(-g * t) * s * s / t

        def sin_remainder(t):
            if t == 0.0:
                return 0.0
            ph = c * t * math.log(t)
            d = math.sin(ph) - ph if abs(ph) > 1e-3 else ph**5 / 120.0 - ph**3 / 6.0
            return math.exp(-g * t) * d / t

        w = abs(xp)
        # int_0^inf e^{-g t} ln t cos(w t) dt = Re[-(euler_gamma + ln s)/s], s = g - i w
        s = complex(g, -w)
        log_term = (-(np.euler_gamma + cmath.log(s)) / s).real
        total += c * log_term
        if w > g:
            v1, _ = _quad_checked(cos_part, 0.0, math.inf, spec, weight="sin", wvar=w, limlst=200)
            v2, _ = _quad_checked(sin_remainder, 0.0, math.inf, spec, weight="cos", wvar=w, limlst=200)
        else:
            # slow oscillation against the e^{-g t} decay: ordinary quadrature
            # (the cycle-by-cycle routine would take cycles of length pi/w)
            v1 = 0.0
            if w > 0.0:
                v1, _ = _quad_checked(lambda t: cos_part(t) * math.sin(w * t), 0.0, math.inf, spec)
            v2, _ = _quad_checked(lambda t: sin_remainder(t) * math.cos(w * t), 0.0, math.inf, spec)
        total += (v1 if xp > 0 else -v1) + v2
    return min(1.0, max(0.0, 0.5 + total / math.pi))


def stable_cdf(law: StableLaw, x, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """CDF of ``law`` at ``x`` (scalar or array)."""
    if law.alpha != 1:
        raise DomainError("only tail index alpha == 1 is supported")
    if np.ndim(x) == 0:
        return _stable_cdf_scalar(law, float(x), spec)
    arr = np.asarray(x, dtype=float)
    out = np.empty(arr.shape)
    for idx, xi in np.ndenumerate(arr):
        out[idx] = _stable_cdf_scalar(law, float(xi), spec)
    return out


def _tail_guess(law: StableLaw, u: float) -> float:
    """Starting point for the quantile search.

    Far in the right tail 1 - F(q) ~ (1 + beta)/(pi q) for the standardised law,
    refined by the log term q ~ y + (2 beta / pi) ln y.  Elsewhere the Cauchy
    quantile is close enough to seed a bracket.
    """
    if u > 0.9 and law.beta > -1:
        y = (1 + law.beta) / (math.pi * (1 - u))
        q = y + _TWO_OVER_PI * law.beta * math.log(y)
    else:
        q = math.tan(math.pi * (u - 0.5))
    return law.gamma * q + law.delta + _TWO_OVER_PI * law.beta * law.gamma * math.log(law.gamma)


@functools.lru_cache(maxsize=4096)
def _stable_quantile_cached(law: StableLaw, u: float, spec: QuadratureSpec) -> float:
    x0 = _tail_guess(law, u)

    def f(x):
        return _stable_cdf_scalar(law, x, spec) - u

    step = law.gamma * max(1.0, 0.05 * abs(x0))
    lo, hi = x0 - step, x0 + step
    flo, fhi = f(lo), f(hi)
    for _ in range(200):
        if flo <= 0 <= fhi:
            break
        if flo > 0:
            hi, fhi = lo, flo
            step *= 2
            lo = lo - step
            flo = f(lo)
        else:
            lo, flo = hi, fhi
            step *= 2
            hi = hi + step
            fhi = f(hi)
    else:
        raise SolverError(f"could not bracket the {u}-quantile", diagnostics={"lo": lo, "hi": hi})
    tol = 1e-13 * max(1.0, abs(x0))
    return find_root(f, RootBracket(lo, hi) if lo < hi else RootBracket(lo, lo + tol), tol)


def stable_quantile(law: StableLaw, u: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """x with stable_cdf(law, x) = u, for u in (0, 1)."""
    if law.alpha != 1:
        raise DomainError("only tail index alpha == 1 is supported")
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u}")
    return _stable_quantile_cached(law, u, spec)


# ---------------------------------------------------------------------------
# Location shift K * E sin(W / K)


@functools.lru_cache(maxsize=1024)
def _delta_shift_cached(tail: TailLaw, K: float, spec: QuadratureSpec) -> float:
    # Substitute u = x/K: Delta = int sin(u) * K^2 f(K u) du over u >= lower/K.
    # The first half-period [lower/K, pi] carries the mass; beyond pi the
    # integrand is sin(u) times a smooth 1/u^2 tail, which QUADPACK's Fourier
    # routine sums cycle by cycle (cycles at multiples of pi*K in x).
    if tail is TailLaw.HALF_CAUCHY:
        lo = 0.0

        def amp(u):
            return _TWO_OVER_PI * K * K / (1.0 + (K * u) ** 2)

    elif tail is TailLaw.PARETO_UNIT:
        lo = 1.0 / K

        def amp(u):
            return 1.0 / (u * u)

    else:
        raise DomainError("delta_shift is defined for non-negative tails only")

    head_end = math.pi
    total = 0.0
    if lo < head_end:
        # breakpoints around the peak of the amplitude near u ~ 1/K
        pts = [p for p in (10.0 ** j / K for j in range(-3, 20)) if lo < p < head_end]
        if len(pts) >= spec.limit:
            pts = []
        val, _ = _quad_checked(
            lambda u: math.sin(u) * amp(u), lo, head_end, spec, points=pts or None
        )
        total += val
    start = max(lo, head_end)
    val, _ = _quad_checked(amp, start, math.inf, spec, weight="sin", wvar=1.0, limlst=200)
    total += val
    return total


def delta_shift(tail: TailLaw, K: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Centering constant K * E[sin(W / K)] for W drawn from ``tail``.

    ``K`` is normally the number of combined p-values but any positive real
    scale is accepted (the finite-K normaliser is not an integer).
    """
    if not isinstance(tail, TailLaw):
        tail = TailLaw(tail)
    K = float(K)
    if not (K > 0 and np.isfinite(K)):
        raise DomainError("K must be a positive finite number")
    return _delta_shift_cached(tail, K, spec)


# ---------------------------------------------------------------------------
# Chambers-Mallows-Stuck sampler (independent oracle for stable_cdf)


def cms_stable_sample(law: StableLaw, rng, n: int) -> np.ndarray:
    """n draws from S(1, beta, gamma, delta) by the Chambers-Mallows-Stuck method."""
    if law.alpha != 1:
        raise DomainError("only tail index alpha == 1 is supported")
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(rng)
    half_pi = 0.5 * math.pi
    v = rng.uniform(-half_pi, half_pi, size=n)
    w = rng.standard_exponential(size=n)
    b = law.beta
    bv = half_pi + b * v
    with np.errstate(divide="ignore", invalid="ignore"):
        x = _TWO_OVER_PI * (bv * np.tan(v) - b * np.log(half_pi * w * np.cos(v) / bv))
    g = law.gamma
    return g * x + law.delta + _TWO_OVER_PI * b * g * math.log(g)


def ecdf_sup_distance(sample, cdf, n_grid: int = 500):
    """Bounds on sup_x |ECDF(x) - cdf(x)| from ``n_grid`` CDF evaluations.

    The grid is taken at evenly spaced order statistics of ``sample``.
    Monotonicity of both functions gives a rigorous upper bound between grid
    points; the lower bound is the largest gap seen at the grid itself.
    Returns ``(lower, upper)``.
    """
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n == 0:
        raise DomainError("empty sample")
    ranks = np.unique(np.linspace(0, n - 1, max(2, int(n_grid))).round().astype(int))
    grid = xs[ranks]
    F = np.asarray(cdf(grid), dtype=float)
    right = np.searchsorted(xs, grid, side="right") / n  # ECDF(g)
    left = np.searchsorted(xs, grid, side="left") / n  # ECDF(g-)
    lower = float(np.max(np.maximum(np.abs(right - F), np.abs(left - F))))
    gaps = np.maximum(left[1:] - F[:-1], F[1:] - right[:-1])
    upper = max(lower, float(np.max(gaps, initial=0.0)), float(left[0]), float(F[0]),
                float(1 - right[-1]), float(1 - F[-1]))
    return lower, upper
