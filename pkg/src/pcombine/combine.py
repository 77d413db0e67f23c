"""Combination statistics and their generalized-mean forms.

Each combiner maps p-values through a transform phi, averages, and maps back
with psi = phi^{-1}:

    CCT   phi(p) = tan{(0.5 - p) pi}     psi(u) = 1/2 - arctan(u)/pi
    PCCT  phi(p) = tan{(0.5 - p/2) pi}   psi(u) = 1 - (2/pi) arctan(u)
    HMP   phi(p) = 1/p                   psi(u) = 1/u

Bonferroni is an order-statistic rule, K * min(p), and has no mean form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedKindError

__all__ = [
    "PValueVector",
    "CombinerKind",
    "CombinedStatistic",
    "SANITIZE_FLOOR",
    "CCT_ONE_NUDGE",
    "transform",
    "inverse_transform",
    "combine",
    "combine_cct",
    "combine_pcct",
    "combine_hmp",
    "combine_bonferroni",
    "approx_pvalue",
    "generalized_mean",
]

SANITIZE_FLOOR = 1e-300
# p = 1 is a pole of the CCT transform; it is evaluated at 1 - 1e-16 instead.
CCT_ONE_NUDGE = 1e-16


class CombinerKind(enum.Enum):
    BONFERRONI = "bonferroni"
    CCT = "cct"
    PCCT = "pcct"
    HMP = "hmp"

    @classmethod
    def parse(cls, name) -> "CombinerKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise DomainError(f"unknown combiner {name!r}") from None


class PValueVector:
    """A validated, read-only vector of K p-values in (0, 1].

    Zeros are rejected: they send the tan and reciprocal transforms to
    infinity.  Pass ``sanitize=True`` to floor them at ``floor`` instead.
    """

    __slots__ = ("_values",)

    def __init__(self, values, *, sanitize: bool = False, floor: float = SANITIZE_FLOOR):
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise DomainError("need at least one p-value")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DomainError(f"p-value at position {bad} is not finite")
        if sanitize:
            if not 0 < floor < 1:
                raise DomainError("sanitize floor must lie in (0, 1)")
            arr = np.where(arr == 0.0, floor, arr)
        outside = (arr <= 0.0) | (arr > 1.0)
        if outside.any():
            bad = int(np.flatnonzero(outside)[0])
            hint = " (use sanitize=True to floor zeros)" if arr[bad] == 0.0 else ""
            raise DomainError(f"p-value at position {bad} is {arr[bad]!r}, outside (0, 1]{hint}")
        arr.setflags(write=False)
        self._values = arr

    @classmethod
    def coerce(cls, p) -> "PValueVector":
        return p if isinstance(p, cls) else cls(p)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def K(self) -> int:
        return int(self._values.size)

    @property
    def minimum(self) -> float:
        return float(self._values.min())

    def __len__(self):
        return self.K

    def __repr__(self):
        return f"PValueVector(K={self.K})"


@dataclass(frozen=True)
class CombinedStatistic:
    kind: CombinerKind
    statistic: float
    mean_scale: float
    K: int


# ---------------------------------------------------------------------------
# transforms, vectorised over any array shape


def _cct_transform(p):
    p = np.minimum(np.asarray(p, dtype=float), 1.0 - CCT_ONE_NUDGE)
    # tan{(0.5 - p) pi} = cot(pi p); the reflected branch keeps precision near 1
    with np.errstate(divide="ignore"):
        return np.where(p < 0.5, 1.0 / np.tan(math.pi * p), -1.0 / np.tan(math.pi * (1.0 - p)))


def _pcct_transform(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(p <= 0.5, 1.0 / np.tan(0.5 * math.pi * p), np.tan(0.5 * math.pi * (1.0 - p)))


def _hmp_transform(p):
    with np.errstate(divide="ignore"):
        return 1.0 / np.asarray(p, dtype=float)


def transform(kind: CombinerKind, p):
    """phi for ``kind`` applied elementwise."""
    kind = CombinerKind.parse(kind)
    if kind is CombinerKind.CCT:
        return _cct_transform(p)
    if kind is CombinerKind.PCCT:
        return _pcct_transform(p)
    if kind is CombinerKind.HMP:
        return _hmp_transform(p)
    raise UnsupportedKindError("Bonferroni has no transform; it uses K * min(p)")


def inverse_transform(kind: CombinerKind, u):
    """psi for ``kind``: maps a statistic back to the p-value scale."""
    kind = CombinerKind.parse(kind)
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        if kind is CombinerKind.CCT:
            # 1/2 - arctan(u)/pi, written as arctan(1/u)/pi for u > 0 to keep
            # small values accurate
            pos = np.arctan(1.0 / np.where(u > 0, u, 1.0)) / math.pi
            return np.where(u > 0, pos, 0.5 - np.arctan(u) / math.pi)
        if kind is CombinerKind.PCCT:
            pos = (2.0 / math.pi) * np.arctan(1.0 / np.where(u > 1, u, 1.0))
            return np.where(u > 1, pos, 1.0 - (2.0 / math.pi) * np.arctan(u))
        if kind is CombinerKind.HMP:
            return 1.0 / u
    raise UnsupportedKindError("Bonferroni has no inverse transform")


def _scalar(x) -> float:
    return float(np.asarray(x).reshape(()))


def _mean_form(kind: CombinerKind, p) -> CombinedStatistic:
    p = PValueVector.coerce(p)
    # np.sum is pairwise, so the result does not depend on how K is partitioned
    stat = float(np.sum(transform(kind, p.values)) / p.K)
    return CombinedStatistic(kind, stat, _scalar(inverse_transform(kind, stat)), p.K)


def combine_cct(p) -> CombinedStatistic:
    """Cauchy combination: mean of tan{(0.5 - p_i) pi}."""
    return _mean_form(CombinerKind.CCT, p)


def combine_pcct(p) -> CombinedStatistic:
    """Positive Cauchy combination: mean of tan{(0.5 - p_i/2) pi}, always >= 0."""
    return _mean_form(CombinerKind.PCCT, p)


def combine_hmp(p) -> CombinedStatistic:
    """Mean of 1/p_i; ``mean_scale`` is the harmonic mean of p."""
    return _mean_form(CombinerKind.HMP, p)


def combine_bonferroni(p) -> CombinedStatistic:
    p = PValueVector.coerce(p)
    stat = p.K * p.minimum
    return CombinedStatistic(CombinerKind.BONFERRONI, stat, min(stat, 1.0), p.K)


_COMBINERS = {
    CombinerKind.BONFERRONI: combine_bonferroni,
    CombinerKind.CCT: combine_cct,
    CombinerKind.PCCT: combine_pcct,
    CombinerKind.HMP: combine_hmp,
}


def combine(p, kind) -> CombinedStatistic:
    return _COMBINERS[CombinerKind.parse(kind)](p)


def approx_pvalue(stat: CombinedStatistic) -> float:
    """Cauchy-tail approximate p-value for CCT or PCCT.

    For PCCT this is 1 - (2/pi) arctan(T), the doubled Cauchy tail.  HMP is
    refused: its raw harmonic mean is anti-conservative and is only
    meaningful against a VWD or VAD threshold.
    """
    if stat.kind not in (CombinerKind.CCT, CombinerKind.PCCT):
        raise UnsupportedKindError(
            f"no Cauchy-tail p-value for {stat.kind.value}; compare against a VWD/VAD threshold"
        )
    return min(1.0, max(stat.mean_scale, np.nextafter(0.0, 1.0)))


def generalized_mean(p, kind) -> float:
    """M_phi(p) = psi(mean(phi(p)))."""
    kind = CombinerKind.parse(kind)
    if kind is CombinerKind.BONFERRONI:
        raise UnsupportedKindError("Bonferroni is not a generalized mean")
    return _mean_form(kind, p).mean_scale
