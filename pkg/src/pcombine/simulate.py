"""Monte Carlo size and power for the combination tests.

Z-scores are drawn from N(mu, Sigma) with Sigma either AR(1),
rho^{|i-j|}, or compound symmetry, (1 - rho) I + rho J.  Neither matrix is
ever formed; both have O(K) exact factorisations.

Replicate r always draws from its own stream, seeded by (seed, r), so a
report is the same whatever the block size or number of worker threads.
"""

from __future__ import annotations

import enum
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sps
from scipy import special, stats

from .combine import SANITIZE_FLOOR, CombinerKind, PValueVector, inverse_transform, transform
from .errors import DomainError
from .thresholds import ThresholdKind, ThresholdResult, threshold

__all__ = [
    "CovarianceKind",
    "CovarianceModel",
    "SignalPattern",
    "SignMode",
    "SignalConfig",
    "Side",
    "ExperimentPlan",
    "MethodResult",
    "MonteCarloReport",
    "replicate_rng",
    "sample_zscores",
    "zscores_to_pvalues",
    "run_experiment",
    "replicate_statistics",
    "power_curve",
    "worker_count",
]


class CovarianceKind(enum.Enum):
    INDEPENDENT = "independent"
    AR1 = "ar1"
    COMPOUND_SYMMETRY = "compound_symmetry"


@dataclass(frozen=True)
class CovarianceModel:
    kind: CovarianceKind = CovarianceKind.INDEPENDENT
    rho: float = 0.0

    def __post_init__(self):
        kind = CovarianceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        rho = float(self.rho)
        object.__setattr__(self, "rho", rho)
        if kind is CovarianceKind.AR1 and not -1 < rho < 1:
            raise DomainError(f"AR(1) needs rho in (-1, 1), got {rho}")
        if kind is CovarianceKind.COMPOUND_SYMMETRY and not 0 <= rho <= 1:
            raise DomainError(f"compound symmetry needs rho in [0, 1], got {rho}")
        if kind is CovarianceKind.INDEPENDENT and rho != 0:
            raise DomainError("independent model takes rho = 0")

    @classmethod
    def ar1(cls, rho):
        return cls(CovarianceKind.AR1, rho)

    @classmethod
    def compound_symmetry(cls, rho):
        return cls(CovarianceKind.COMPOUND_SYMMETRY, rho)


class SignalPattern(enum.Enum):
    NULL = "null"
    SPARSE = "sparse"
    DENSE = "dense"


class SignMode(enum.Enum):
    ALL_POSITIVE = "all_positive"
    HALF_NEGATIVE = "half_negative"


@dataclass(frozen=True)
class SignalConfig:
    pattern: SignalPattern = SignalPattern.NULL
    strength: float = 0.0
    sign_mode: SignMode = SignMode.ALL_POSITIVE

    def __post_init__(self):
        object.__setattr__(self, "pattern", SignalPattern(self.pattern))
        object.__setattr__(self, "sign_mode", SignMode(self.sign_mode))
        if not self.strength >= 0:
            raise DomainError("signal strength must be >= 0")

    def support(self, K: int) -> np.ndarray:
        """0-based indices carrying signal."""
        if self.pattern is SignalPattern.NULL:
            return np.empty(0, dtype=np.intp)
        if self.pattern is SignalPattern.DENSE:
            return np.arange(K)
        # 1-based blocks 1..floor(0.05K) and floor(0.5K)+1..floor(0.55K)+1,
        # computed in integers to avoid 0.55*K rounding down
        first = np.arange(0, K * 5 // 100)
        second = np.arange(K // 2, min(K * 55 // 100 + 1, K))
        return np.concatenate([first, second])

    def mean_vector(self, K: int) -> np.ndarray:
        mu = np.zeros(K)
        idx = self.support(K)
        if idx.size == 0 or self.strength == 0:
            return mu
        mu[idx] = self.strength
        if self.sign_mode is SignMode.HALF_NEGATIVE:
            # first half of the signal coordinates positive, the rest negative;
            # an odd count gives the extra one to the positive half
            mu[idx[(idx.size + 1) // 2 :]] = -self.strength
        return mu


class Side(enum.Enum):
    ONE_SIDED = "one-sided"
    TWO_SIDED = "two-sided"


Method = tuple  # (CombinerKind, ThresholdKind | None)


def _method(m) -> Method:
    if isinstance(m, str):
        kind, _, fam = m.partition(":")
        m = (kind, fam or None)
    kind, fam = m
    kind = CombinerKind.parse(kind)
    fam = None if fam is None else ThresholdKind.parse(fam)
    return kind, fam


@dataclass(frozen=True)
class ExperimentPlan:
    K: int
    covariance: CovarianceModel = field(default_factory=CovarianceModel)
    signal: SignalConfig = field(default_factory=SignalConfig)
    methods: tuple = ()
    alpha: float = 0.05
    replicates: int = 1000
    seed: int = 0
    side: Side = Side.ONE_SIDED

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "methods", tuple(_method(m) for m in self.methods))
        if int(self.K) != self.K or self.K < 1:
            raise DomainError("K must be a positive integer")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    def describe(self) -> dict:
        return {
            "K": int(self.K),
            "covariance": {"kind": self.covariance.kind.value, "rho": self.covariance.rho},
            "signal": {
                "pattern": self.signal.pattern.value,
                "strength": self.signal.strength,
                "sign_mode": self.signal.sign_mode.value,
            },
            "methods": [_method_label(m) for m in self.methods],
            "alpha": self.alpha,
            "replicates": int(self.replicates),
            "seed": int(self.seed),
            "side": self.side.value,
        }


def _method_label(m: Method) -> str:
    kind, fam = m
    return kind.value if fam is None else f"{kind.value}:{fam.value}"


@dataclass(frozen=True)
class MethodResult:
    kind: CombinerKind
    family: ThresholdKind | None
    rejections: int
    replicates: int
    frequency: float
    ci_low: float
    ci_high: float
    mean_scale_threshold: float

    @property
    def label(self) -> str:
        return _method_label((self.kind, self.family))

    @property
    def std_error(self) -> float:
        f = self.frequency
        return float(np.sqrt(f * (1 - f) / self.replicates))


@dataclass
class MonteCarloReport:
    plan: ExperimentPlan
    results: list
    wall_time: float = 0.0

    def __getitem__(self, method) -> MethodResult:
        key = _method(method)
        for r in self.results:
            if (r.kind, r.family) == key:
                return r
        raise KeyError(_method_label(key))

    def rows(self) -> list:
        out = []
        for r in self.results:
            out.append(
                {
                    "method": r.label,
                    "kind": r.kind.value,
                    "family": r.family.value if r.family else "",
                    "K": int(self.plan.K),
                    "covariance": self.plan.covariance.kind.value,
                    "rho": self.plan.covariance.rho,
                    "pattern": self.plan.signal.pattern.value,
                    "strength": self.plan.signal.strength,
                    "sign_mode": self.plan.signal.sign_mode.value,
                    "side": self.plan.side.value,
                    "alpha": self.plan.alpha,
                    "seed": int(self.plan.seed),
                    "replicates": r.replicates,
                    "rejections": r.rejections,
                    "frequency": r.frequency,
                    "ci_low": r.ci_low,
                    "ci_high": r.ci_high,
                }
            )
        return out

    def as_dict(self) -> dict:
        return {"plan": self.plan.describe(), "results": self.rows(), "wall_time": self.wall_time}


# ---------------------------------------------------------------------------
# sampling


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    """The stream owned by replicate ``r``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(r)])))


def _correlate(cov: CovarianceModel, eps: np.ndarray, shared=None) -> np.ndarray:
    """Turn iid N(0,1) rows into rows with covariance ``cov`` (last axis = K)."""
    rho = cov.rho
    if cov.kind is CovarianceKind.AR1 and rho != 0:
        # X_1 = e_1, X_i = rho X_{i-1} + sqrt(1 - rho^2) e_i
        s = np.sqrt(1.0 - rho * rho)
        e = eps.copy()
        e[..., 0] /= s
        return sps.lfilter([s], [1.0, -rho], e, axis=-1)
    if cov.kind is CovarianceKind.COMPOUND_SYMMETRY and rho != 0:
        return np.sqrt(rho) * shared[..., None] + np.sqrt(1.0 - rho) * eps
    return eps


def _draw(cov: CovarianceModel, K: int, rng: np.random.Generator):
    # compound symmetry takes its shared factor first, then the K innovations
    shared = rng.standard_normal() if cov.kind is CovarianceKind.COMPOUND_SYMMETRY else None
    return shared, rng.standard_normal(K)


def sample_zscores(cov: CovarianceModel, mu, K: int, rng: np.random.Generator) -> np.ndarray:
    """One draw of X ~ N(mu, Sigma)."""
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (K,))
    shared, eps = _draw(cov, K, rng)
    if shared is not None:
        shared = np.asarray(shared)
    return _correlate(cov, eps, shared) + mu


def _pvalues(x: np.ndarray, side: Side) -> np.ndarray:
    # ndtr(-x) is 1 - Phi(x) without cancellation in the upper tail
    if side is Side.ONE_SIDED:
        p = special.ndtr(-x)
    else:
        p = 2.0 * special.ndtr(-np.abs(x))
    return np.maximum(p, SANITIZE_FLOOR)


def zscores_to_pvalues(x, side=Side.ONE_SIDED) -> PValueVector:
    """Normal-tail p-values; one-sided 1 - Phi(x) or two-sided 2{1 - Phi(|x|)}."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("z-scores must be finite")
    return PValueVector(_pvalues(x, Side(side)))


def worker_count(requested=None) -> int:
    env = os.environ.get("PCOMBINE_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, int(env))
        except ValueError:
            raise DomainError(f"PCOMBINE_THREADS must be an integer, got {env!r}") from None
    if requested is not None:
        n = max(1, int(requested))
    return n


def _block_pvalues(plan: ExperimentPlan, start: int, stop: int, mu: np.ndarray) -> np.ndarray:
    K = int(plan.K)
    eps = np.empty((stop - start, K))
    shared = np.empty(stop - start)
    for i, r in enumerate(range(start, stop)):
        s, eps[i] = _draw(plan.covariance, K, replicate_rng(plan.seed, r))
        if s is not None:
            shared[i] = s
    x = _correlate(plan.covariance, eps, shared)
    if mu.any():
        x += mu
    return _pvalues(x, plan.side)


def _block_statistics(kinds, p: np.ndarray) -> dict:
    K = p.shape[1]
    out = {}
    for kind in kinds:
        if kind is CombinerKind.BONFERRONI:
            t = K * p.min(axis=1)
            out[kind] = (t, np.minimum(t, 1.0))
        else:
            t = np.sum(transform(kind, p), axis=1) / K
            out[kind] = (t, inverse_transform(kind, t))
    return out


def _blocks(n: int, K: int):
    size = int(max(1, min(1024, 4_000_000 // max(K, 1))))
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def _map_blocks(fn, blocks, workers):
    if workers <= 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so merging is deterministic
        return list(pool.map(fn, blocks))


def _thresholds(plan: ExperimentPlan) -> dict:
    return {m: threshold(m[0], m[1], int(plan.K), plan.alpha) for m in plan.methods}


def run_experiment(plan: ExperimentPlan, workers=None) -> MonteCarloReport:
    """Rejection frequencies of every method in ``plan`` with Wilson 95% intervals."""
    if not plan.methods:
        raise DomainError("plan lists no methods")
    t0 = time.perf_counter()
    # thresholds first: a failure here aborts before any sampling
    thr: dict[Method, ThresholdResult] = _thresholds(plan)
    kinds = sorted({m[0] for m in plan.methods}, key=lambda k: k.value)
    mu = plan.signal.mean_vector(int(plan.K))

    def work(block):
        start, stop = block
        p = _block_pvalues(plan, start, stop, mu)
        stats_ = _block_statistics(kinds, p)
        counts = {}
        for m, t in thr.items():
            mean_scale = stats_[m[0]][1]
            if not np.all(np.isfinite(mean_scale)):
                bad = start + int(np.flatnonzero(~np.isfinite(mean_scale))[0])
                raise DomainError(f"non-finite statistic in replicate {bad}")
            counts[m] = int(np.count_nonzero(mean_scale <= t.mean_scale_threshold))
        return counts

    parts = _map_blocks(work, _blocks(int(plan.replicates), int(plan.K)), worker_count(workers))
    n = int(plan.replicates)
    results = []
    for m in plan.methods:
        k = sum(part[m] for part in parts)
        ci = stats.binomtest(k, n).proportion_ci(0.95, method="wilson")
        results.append(
            MethodResult(m[0], m[1], k, n, k / n, float(ci.low), float(ci.high),
                         thr[m].mean_scale_threshold)
        )
    return MonteCarloReport(plan, results, time.perf_counter() - t0)


def replicate_statistics(plan: ExperimentPlan, kinds, workers=None) -> dict:
    """Per-replicate statistics T for each combiner kind, in replicate order."""
    kinds = [CombinerKind.parse(k) for k in kinds]
    mu = plan.signal.mean_vector(int(plan.K))

    def work(block):
        p = _block_pvalues(plan, block[0], block[1], mu)
        return {k: v[0] for k, v in _block_statistics(kinds, p).items()}

    parts = _map_blocks(work, _blocks(int(plan.replicates), int(plan.K)), worker_count(workers))
    return {k: np.concatenate([part[k] for part in parts]) for k in kinds}


def power_curve(plan: ExperimentPlan, strengths, workers=None) -> list:
    """Long-format rows (strength, method, power, interval), one run per strength."""
    if plan.signal.pattern is SignalPattern.NULL:
        raise DomainError("power curves need a sparse or dense signal")
    rows = []
    for c0 in strengths:
        sub = replace(plan, signal=replace(plan.signal, strength=float(c0)))
        rep = run_experiment(sub, workers)
        for r in rep.results:
            rows.append(
                {
                    "strength": float(c0),
                    "method": r.label,
                    "power": r.frequency,
                    "ci_low": r.ci_low,
                    "ci_high": r.ci_high,
                    "replicates": r.replicates,
                }
            )
    return rows
