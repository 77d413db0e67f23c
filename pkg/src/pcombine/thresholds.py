"""Rejection thresholds for the combination tests.

Three families are available:

* ``CAUCHY_APPROX`` -- the Cauchy tail cut-off, K-free.
* ``VWD`` -- valid under weak dependence; built on the index-1 stable limit
  of the sum of transformed p-values.
* ``VAD`` -- valid under arbitrary dependence; the sharp robust bound found
  by solving a one-dimensional equation on (0, alpha/K).

A threshold is stored on both scales: reject when the generalized mean
M_phi is at most ``mean_scale_threshold``, equivalently when the statistic T
is at least ``stat_scale_threshold``.  Bonferroni has its own exact rule
K * min(p) <= alpha and no threshold family.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .combine import CombinedStatistic, CombinerKind, inverse_transform
from .errors import DomainError, SolverError, UnsupportedKindError, UsageError
from .numerics import (
    DEFAULT_QUADRATURE,
    S0,
    QuadratureSpec,
    RootBracket,
    TailLaw,
    delta_shift,
    find_root,
    stable_quantile,
)

__all__ = [
    "ThresholdKind",
    "ThresholdResult",
    "TestReport",
    "cauchy_approx_threshold",
    "vwd_threshold",
    "vad_threshold",
    "vad_threshold_approx",
    "bonferroni_threshold",
    "threshold",
    "decide",
]


class ThresholdKind(enum.Enum):
    CAUCHY_APPROX = "approx"
    VWD = "vwd"
    VAD = "vad"

    @classmethod
    def parse(cls, name) -> "ThresholdKind":
        if isinstance(name, cls):
            return name
        key = str(name).lower()
        aliases = {"cauchyapprox": "approx", "cauchy_approx": "approx", "cauchy": "approx"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown threshold family {name!r}") from None


@dataclass(frozen=True)
class ThresholdResult:
    kind: CombinerKind
    family: ThresholdKind | None  # None for the Bonferroni rule
    alpha: float
    K: int | None  # None when the threshold does not depend on K
    mean_scale_threshold: float
    stat_scale_threshold: float
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class TestReport:
    kind: CombinerKind
    family: ThresholdKind | None
    alpha: float
    K: int
    statistic: float
    mean_scale: float
    approx_pvalue: float | None
    mean_scale_threshold: float
    stat_scale_threshold: float
    reject: bool
    diagnostics: dict = field(default_factory=dict, compare=False)

    __test__ = False  # not a pytest class

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "family": self.family.value if self.family else None,
            "alpha": self.alpha,
            "K": self.K,
            "statistic": self.statistic,
            "mean_scale": self.mean_scale,
            "approx_pvalue": self.approx_pvalue,
            "mean_scale_threshold": self.mean_scale_threshold,
            "stat_scale_threshold": self.stat_scale_threshold,
            "reject": self.reject,
            "diagnostics": dict(self.diagnostics),
        }


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _check_K(K, minimum=1) -> int:
    if isinstance(K, bool) or int(K) != K:
        raise DomainError(f"K must be an integer, got {K!r}")
    K = int(K)
    if K < minimum:
        raise DomainError(f"K must be >= {minimum}, got {K}")
    return K


_MEAN_KINDS = (CombinerKind.CCT, CombinerKind.PCCT, CombinerKind.HMP)


def _check_mean_kind(kind, allowed=_MEAN_KINDS) -> CombinerKind:
    kind = CombinerKind.parse(kind)
    if kind is CombinerKind.BONFERRONI:
        raise UnsupportedKindError(
            "Bonferroni uses its own rule K * min(p) <= alpha; use bonferroni_threshold"
        )
    if kind not in allowed:
        names = ", ".join(k.value for k in allowed)
        raise UnsupportedKindError(f"{kind.value} is not supported here (allowed: {names})")
    return kind


# ---------------------------------------------------------------------------
# Cauchy approximation


@functools.lru_cache(maxsize=1024)
def _cauchy_approx(kind: CombinerKind, alpha: float) -> ThresholdResult:
    # upper quantile of the standard Cauchy: tan{pi (1/2 - a)} = cot(pi a)
    a = alpha / 2 if kind is CombinerKind.PCCT else alpha
    t = 1.0 / math.tan(math.pi * a)
    return ThresholdResult(kind, ThresholdKind.CAUCHY_APPROX, alpha, None, alpha, t, {})


def cauchy_approx_threshold(kind, alpha) -> ThresholdResult:
    """Tail cut-off t_{alpha/2} for PCCT and t_alpha for CCT.

    Both correspond to rejecting when the approximate p-value is <= alpha.
    """
    kind = _check_mean_kind(kind, (CombinerKind.CCT, CombinerKind.PCCT))
    return _cauchy_approx(kind, _check_alpha(alpha))


# ---------------------------------------------------------------------------
# weak dependence


_VWD_TAIL = {CombinerKind.PCCT: TailLaw.HALF_CAUCHY, CombinerKind.HMP: TailLaw.PARETO_UNIT}


@functools.lru_cache(maxsize=1024)
def _vwd(kind: CombinerKind, K: int, alpha: float, spec: QuadratureSpec) -> ThresholdResult:
    if kind is CombinerKind.CCT:
        # the mean of standard Cauchy variables is standard Cauchy for any K
        t = 1.0 / math.tan(math.pi * alpha)
        return ThresholdResult(kind, ThresholdKind.VWD, alpha, K, alpha, t, {})
    tail = _VWD_TAIL[kind]
    # (sum W_i - c_K * Delta(c_K)) / c_K -> S(1, 1, 1, 0) with K P(W > c_K) = 2/pi,
    # so T = sum/K has cut-off (c_K/K) q + Delta(c_K).
    c_K = tail.gclt_scale(K)
    q = stable_quantile(S0, 1.0 - alpha, spec)
    delta = delta_shift(tail, c_K, spec)
    t = (c_K / K) * q + delta
    b = float(inverse_transform(kind, t))
    diag = {"stable_quantile": q, "delta": delta, "scale": c_K}
    return ThresholdResult(kind, ThresholdKind.VWD, alpha, K, b, t, diag)


def vwd_threshold(kind, K, alpha, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> ThresholdResult:
    """Threshold from the stable limit of the statistic under weak dependence.

    CCT: T >= tan{pi (1/2 - alpha)}, i.e. b = alpha exactly.
    PCCT, HMP: T >= (c_K/K) q_{1-alpha} + Delta(c_K), where q is the upper
    quantile of S(1, 1, 1, 0), c_K the finite-K normaliser of the transformed
    p-value tail and Delta the centering shift.
    """
    kind = _check_mean_kind(kind)
    minimum = 1 if kind is CombinerKind.CCT else 2
    return _vwd(kind, _check_K(K, minimum), _check_alpha(alpha), spec)


# ---------------------------------------------------------------------------
# arbitrary dependence


def _vad_pieces(kind: CombinerKind, K: int, alpha: float):
    """H_alpha and its antiderivative integral over [x, alpha/K], in closed form."""
    k1 = K - 1
    half_pi = 0.5 * math.pi

    if kind is CombinerKind.PCCT:

        def H(x):
            r = alpha - k1 * x
            return k1 / math.tan(half_pi * r) + 1.0 / math.tan(half_pi * x)

        def integral(x):
            r = alpha - k1 * x
            return (2 / math.pi) * (math.log(math.sin(half_pi * r)) - math.log(math.sin(half_pi * x)))

        def to_mean(h):
            return (2 / math.pi) * math.atan2(K, h)

    elif kind is CombinerKind.CCT:

        def H(x):
            r = alpha - k1 * x
            return k1 / math.tan(math.pi * r) + 1.0 / math.tan(math.pi * x)

        def integral(x):
            r = alpha - k1 * x
            return (1 / math.pi) * (math.log(math.sin(math.pi * r)) - math.log(math.sin(math.pi * x)))

        def to_mean(h):
            return math.atan2(K, h) / math.pi

    else:

        def H(x):
            return k1 / (alpha - k1 * x) + 1.0 / x

        def integral(x):
            return math.log(alpha - k1 * x) - math.log(x)

        def to_mean(h):
            return K / h

    def g(x):
        return K * integral(x) - (alpha - K * x) * H(x)

    return H, g, to_mean


@functools.lru_cache(maxsize=4096)
def _vad(kind: CombinerKind, K: int, alpha: float, tol: float) -> ThresholdResult:
    H, g, to_mean = _vad_pieces(kind, K, alpha)
    hi = alpha / K
    # g vanishes trivially at alpha/K and tends to -infinity at 0.  Walk up
    # towards alpha/K until g is positive, then halve down until it is not.
    x = None
    for j in range(1, 53):
        y = hi * (1.0 - 2.0**-j)
        if g(y) > 0:
            x = y
            break
    if x is None:
        raise SolverError(
            "no interior sign change: g is not positive anywhere below alpha/K",
            diagnostics={"x": y, "g": g(y)},
        )
    lo = None
    y = x
    for _ in range(1100):
        y = 0.5 * y
        if y == 0.0:
            break
        if g(y) < 0:
            lo = y
            break
        x = y
    if lo is None:
        raise SolverError(
            "g did not become negative on (0, alpha/K)", diagnostics={"x": x, "g": g(x)}
        )
    g_lo = g(lo)
    x_K = find_root(g, RootBracket(lo, x), tol=tol * hi)
    resid = abs(g(x_K))
    if not 0 < x_K < hi:
        raise SolverError("root left the open domain (0, alpha/K)", diagnostics={"x_K": x_K})
    h = H(x_K)
    a = to_mean(h)
    diag = {"x_K": x_K, "residual": resid, "g_lower": g_lo, "bracket": (lo, x)}
    return ThresholdResult(kind, ThresholdKind.VAD, alpha, K, a, h / K, diag)


def vad_threshold(kind, K, alpha, tol: float = 1e-15) -> ThresholdResult:
    """Sharp threshold valid under any dependence among the p-values.

    With H(x) = (K-1) F^{-1}(1 - alpha + (K-1)x) + F^{-1}(1 - x), x_K is the
    root in (0, alpha/K) of

        g(x) = K * int_x^{alpha/K} H(t) dt - (alpha - K x) H(x),

    the integral being available in closed form for all three kinds.  Then
    T >= H(x_K)/K rejects.  ``tol`` is the root tolerance relative to the
    domain width alpha/K.
    """
    kind = _check_mean_kind(kind)
    K = _check_K(K, 2)
    alpha = _check_alpha(alpha)
    if kind is CombinerKind.CCT and alpha > 0.5:
        raise DomainError("CCT VAD thresholds need alpha <= 1/2")
    if not tol > 0:
        raise DomainError("tol must be positive")
    return _vad(kind, K, alpha, float(tol))


def vad_threshold_approx(K, alpha) -> float:
    """Quick conservative estimate alpha / (1.62 ln K) of the PCCT VAD threshold.

    Only offered for K >= 100; use :func:`vad_threshold` otherwise.
    """
    K = _check_K(K, 1)
    alpha = _check_alpha(alpha)
    if K < 100:
        raise DomainError("the 1.62 ln K approximation needs K >= 100; use vad_threshold")
    return alpha / (1.62 * math.log(K))


# ---------------------------------------------------------------------------


def bonferroni_threshold(alpha, K=None) -> ThresholdResult:
    alpha = _check_alpha(alpha)
    K = None if K is None else _check_K(K)
    return ThresholdResult(CombinerKind.BONFERRONI, None, alpha, K, alpha, alpha, {})


def threshold(kind, family, K, alpha, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> ThresholdResult:
    """Dispatch to the requested family.  ``family`` must be None for Bonferroni."""
    kind = CombinerKind.parse(kind)
    if kind is CombinerKind.BONFERRONI:
        if family is not None:
            raise UnsupportedKindError(
                "Bonferroni has no threshold family; it always uses K * min(p) <= alpha"
            )
        return bonferroni_threshold(alpha, K)
    if family is None:
        raise UsageError(f"{kind.value} needs a threshold family (approx, vwd or vad)")
    family = ThresholdKind.parse(family)
    if family is ThresholdKind.CAUCHY_APPROX:
        return cauchy_approx_threshold(kind, alpha)
    if family is ThresholdKind.VWD:
        return vwd_threshold(kind, K, alpha, spec)
    return vad_threshold(kind, K, alpha)


def decide(stat: CombinedStatistic, thr: ThresholdResult) -> TestReport:
    """Reject iff the generalized mean is at most the mean-scale threshold."""
    if stat.kind is not thr.kind:
        raise UsageError(f"statistic is {stat.kind.value} but threshold is for {thr.kind.value}")
    if thr.K is not None and thr.K != stat.K:
        raise UsageError(f"threshold was computed for K={thr.K}, statistic has K={stat.K}")
    reject = bool(stat.mean_scale <= thr.mean_scale_threshold)
    approx = None
    if stat.kind in (CombinerKind.CCT, CombinerKind.PCCT):
        approx = min(1.0, max(stat.mean_scale, np.nextafter(0.0, 1.0)))
    return TestReport(
        kind=stat.kind,
        family=thr.family,
        alpha=thr.alpha,
        K=stat.K,
        statistic=stat.statistic,
        mean_scale=stat.mean_scale,
        approx_pvalue=approx,
        mean_scale_threshold=thr.mean_scale_threshold,
        stat_scale_threshold=thr.stat_scale_threshold,
        reject=reject,
        diagnostics=dict(thr.diagnostics),
    )
