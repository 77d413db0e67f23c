"""Ratio tables for the VAD and VWD thresholds.

``vad_ratio`` is alpha / (ln K * a(alpha)), which tends to 1 as K grows;
``vwd_ratio`` is alpha / b(alpha), which tends to 1 as alpha shrinks.
"""

from __future__ import annotations

import math

from .combine import CombinerKind
from .errors import PCombineError
from .thresholds import vad_threshold, vwd_threshold

__all__ = [
    "DEFAULT_K_GRID",
    "VAD_ALPHAS",
    "VWD_ALPHAS",
    "VAD_KINDS",
    "VWD_KINDS",
    "vad_ratio",
    "vwd_ratio",
    "ratio_table",
]

DEFAULT_K_GRID = tuple(10**j for j in range(1, 9))
VAD_ALPHAS = (0.1, 0.05, 0.01)
VWD_ALPHAS = (0.05, 0.01, 0.001)
VAD_KINDS = (CombinerKind.CCT, CombinerKind.HMP, CombinerKind.PCCT)
# CCT is included for completeness; its ratio is exactly 1
VWD_KINDS = (CombinerKind.CCT, CombinerKind.HMP, CombinerKind.PCCT)


def vad_ratio(kind, K: int, alpha: float) -> float:
    return alpha / (math.log(K) * vad_threshold(kind, K, alpha).mean_scale_threshold)


def vwd_ratio(kind, K: int, alpha: float) -> float:
    return alpha / vwd_threshold(kind, K, alpha).mean_scale_threshold


def ratio_table(which: str, Ks=DEFAULT_K_GRID, alphas=None, kinds=None):
    """Wide table in the layout K x (alpha, kind).

    Returns ``(columns, rows, errors)``.  A cell whose computation fails holds
    None and its message is collected in ``errors`` keyed by (K, alpha, kind).
    """
    which = which.upper()
    if which == "A1":
        fn, alphas, kinds = vad_ratio, alphas or VAD_ALPHAS, kinds or VAD_KINDS
    elif which == "A2":
        fn, alphas, kinds = vwd_ratio, alphas or VWD_ALPHAS, kinds or VWD_KINDS
    else:
        raise ValueError(f"unknown table {which!r}; expected A1 or A2")
    kinds = [CombinerKind.parse(k) for k in kinds]
    if not Ks or not alphas or not kinds:
        raise ValueError("grids must be nonempty")
    columns = ["K"] + [f"{k.value}@{a:g}" for a in alphas for k in kinds]
    rows, errors = [], {}
    for K in Ks:
        row = [int(K)]
        for a in alphas:
            for k in kinds:
                try:
                    row.append(fn(k, int(K), float(a)))
                except PCombineError as exc:
                    row.append(None)
                    errors[(int(K), float(a), k.value)] = str(exc)
        rows.append(row)
    return columns, rows, errors
