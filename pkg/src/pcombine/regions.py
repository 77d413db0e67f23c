"""Region-chunked analysis of long p-value files.

The p-values are cut, in file order, into consecutive regions of K values
and every requested method is applied to each region.  A final region with
fewer than K values is still analysed, with thresholds for its own length,
and flagged as short.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .combine import SANITIZE_FLOOR, CombinerKind, PValueVector, combine, transform
from .errors import DomainError, InputError
from .thresholds import ThresholdKind, ThresholdResult, decide, threshold

__all__ = ["PValueData", "read_pvalue_file", "parse_pvalues", "Region", "RegionReport", "analyze_regions"]

_P_COLUMNS = ("p", "pvalue", "p_value", "p-value", "pval")


@dataclass
class PValueData:
    values: np.ndarray
    ids: list
    lines: list  # 1-based source line of each value


def _parse_p(token: str, line: int, path, sanitize: bool) -> float:
    try:
        v = float(token)
    except ValueError:
        raise InputError(f"cannot parse p-value {token!r}", line, path) from None
    if math.isnan(v) or not 0 <= v <= 1:
        raise InputError(f"p-value {token!r} outside (0, 1]", line, path)
    if v == 0:
        if not sanitize:
            raise InputError("p-value is exactly 0 (use --sanitize to floor it)", line, path)
        v = SANITIZE_FLOOR
    return v


def parse_pvalues(text: str, *, fmt: str = "auto", column=None, id_column=None,
                  sanitize: bool = False, path=None) -> PValueData:
    """Parse one-column text or CSV content.

    Plain text: one value per line; blank lines and lines starting with '#'
    are skipped.  CSV: a header row, the p-value column given by ``column``
    (default: the first of p, pvalue, p_value, p-value, pval, any case).
    """
    if fmt == "auto":
        fmt = "csv" if (column is not None or id_column is not None or _looks_csv(text)) else "text"
    values, ids, lines = [], [], []
    if fmt == "text":
        for n, raw in enumerate(text.splitlines(), start=1):
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            if len(s.split()) != 1:
                raise InputError("expected a single value per line", n, path)
            values.append(_parse_p(s, n, path, sanitize))
            ids.append(str(len(values)))
            lines.append(n)
    elif fmt == "csv":
        rows = [(n, r) for n, r in enumerate(csv.reader(io.StringIO(text)), start=1)
                if r and not r[0].lstrip().startswith("#")]
        if not rows:
            raise InputError("empty CSV input", None, path)
        header_line, header = rows[0]
        names = [h.strip() for h in header]
        lookup = {h.lower(): i for i, h in enumerate(names)}
        if column is None:
            pi = next((lookup[c] for c in _P_COLUMNS if c in lookup), None)
            if pi is None:
                raise InputError(f"no p-value column among {names}; pass a column name",
                                 header_line, path)
        else:
            if column not in names:
                raise InputError(f"column {column!r} not in header {names}", header_line, path)
            pi = names.index(column)
        ii = None
        if id_column is not None:
            if id_column not in names:
                raise InputError(f"column {id_column!r} not in header {names}", header_line, path)
            ii = names.index(id_column)
        for n, r in rows[1:]:
            if len(r) != len(names):
                raise InputError(f"expected {len(names)} fields, found {len(r)}", n, path)
            values.append(_parse_p(r[pi].strip(), n, path, sanitize))
            ids.append(r[ii].strip() if ii is not None else str(len(values)))
            lines.append(n)
    else:
        raise InputError(f"unknown format {fmt!r}")
    if not values:
        raise InputError("no p-values found", None, path)
    return PValueData(np.asarray(values), ids, lines)


def _looks_csv(text: str) -> bool:
    for raw in text.splitlines():
        s = raw.strip()
        if s and not s.startswith("#"):
            return "," in s
    return False


def read_pvalue_file(path, **kw) -> PValueData:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read file: {exc.strerror}", None, path) from None
    if kw.get("fmt", "auto") == "auto" and str(path).lower().endswith(".csv"):
        kw["fmt"] = "csv"
    return parse_pvalues(text, path=path, **kw)


@dataclass
class Region:
    index: int
    first_id: str
    last_id: str
    size: int
    short: bool
    decisions: dict  # method label -> bool
    statistics: dict = field(default_factory=dict)  # method label -> mean-scale value


@dataclass
class RegionReport:
    K: int
    alpha: float
    methods: list
    regions: list

    @property
    def counts(self) -> dict:
        return {m: sum(r.decisions[m] for r in self.regions) for m in self.methods}

    def summary(self) -> dict:
        return {
            "K": self.K,
            "alpha": self.alpha,
            "regions": len(self.regions),
            "short_final_region": bool(self.regions and self.regions[-1].short),
            "significant_regions": self.counts,
        }


def _label(kind: CombinerKind, family) -> str:
    return kind.value if family is None else f"{kind.value}:{family.value}"


def _parse_method(m):
    if isinstance(m, str):
        kind, _, fam = m.partition(":")
        m = (kind, fam or None)
    kind = CombinerKind.parse(m[0])
    fam = None if m[1] is None else ThresholdKind.parse(m[1])
    return kind, fam


def _single_value_threshold(kind, family, alpha) -> ThresholdResult:
    # With one p-value every generalized mean is p itself and the exact
    # level-alpha rule is p <= alpha.
    stat = float(transform(kind, alpha))
    mean = alpha
    return ThresholdResult(kind, family, alpha, 1, mean, stat, {"single_value": True})


def analyze_regions(values, K: int, methods, alpha: float, ids=None) -> RegionReport:
    """Apply each (combiner, family) to consecutive chunks of ``K`` p-values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DomainError("no p-values to analyse")
    if int(K) != K or K < 1:
        raise DomainError("chunk size K must be a positive integer")
    K = int(K)
    methods = [_parse_method(m) for m in methods]
    if not methods:
        raise DomainError("no methods requested")
    ids = [str(i + 1) for i in range(values.size)] if ids is None else list(ids)
    labels = [_label(*m) for m in methods]

    thr_cache = {}

    def thr_for(m, n):
        key = (m, n)
        if key not in thr_cache:
            if n == 1 and m[1] in (ThresholdKind.VWD, ThresholdKind.VAD):
                thr_cache[key] = _single_value_threshold(m[0], m[1], alpha)
            else:
                thr_cache[key] = threshold(m[0], m[1], n, alpha)
        return thr_cache[key]

    regions = []
    for idx, start in enumerate(range(0, values.size, K)):
        chunk = PValueVector(values[start : start + K])
        n = chunk.K
        decisions, stats = {}, {}
        for m, lab in zip(methods, labels):
            rep = decide(combine(chunk, m[0]), thr_for(m, n))
            decisions[lab] = rep.reject
            stats[lab] = rep.mean_scale
        regions.append(
            Region(idx + 1, ids[start], ids[start + n - 1], n, n < K, decisions, stats)
        )
    return RegionReport(K, float(alpha), labels, regions)
